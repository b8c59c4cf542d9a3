// core/include/avse/peranalysis.h

// Copyright 2026  The AVSE-KD Authors

// See ../../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AVSE_PERANALYSIS_H_
#define AVSE_PERANALYSIS_H_

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace avse {

struct PhoneSequence {
  std::string utt_id;
  std::vector<std::string> phones;
};

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

struct AlignedPair {
  EditOp op;
  std::string ref;  // empty for insertions
  std::string hyp;  // empty for deletions
};

struct Alignment {
  std::vector<AlignedPair> pairs;
  std::size_t distance = 0;
};

/// Minimum edit distance alignment with unit costs. The backtrace prefers
/// match, then substitution, deletion, insertion.
Alignment Align(std::span<const std::string> ref, std::span<const std::string> hyp);

/// Categories printed first, in this order; others follow sorted.
inline constexpr const char *kPhoneCategories[] = {
    "Silence", "Vowels", "Labial",        "Labio-dental", "Dental",
    "Alveolar", "Alveo-palatal", "Palatal", "Velar",        "Glottal"};

struct CategoryMap {
  std::map<std::string, std::string> category_of;

  /// Throws InvalidArgument naming the phone if it is not mapped.
  const std::string &Lookup(const std::string &phone) const;
  /// Standard categories, then any additional ones in sorted order.
  std::vector<std::string> OrderedCategories() const;
};

/// `phone<TAB>category` lines; blank lines and '#' comments are skipped.
CategoryMap ParseCategoryMap(std::istream &in);
CategoryMap ReadCategoryMap(const std::string &path);

/// One utterance per line: utt_id followed by whitespace-separated phones.
std::vector<PhoneSequence> ParsePhoneSequences(std::istream &in);
std::vector<PhoneSequence> ReadPhoneFile(const std::string &path);

struct CategoryCounts {
  std::string category;
  std::size_t ref_phones = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;

  std::size_t errors() const { return substitutions + deletions; }
  /// 100 * errors / ref_phones, 0 when the category has no reference phones.
  double Per() const;
};

struct PerTable {
  std::vector<CategoryCounts> categories;
  std::size_t insertions = 0;
  std::size_t ref_phones = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;

  /// 100 * (S + D + I) / N.
  double OverallPer() const;
  const CategoryCounts *Find(const std::string &category) const;
};

/// Pools counts over all alignments. Errors count against the category
/// of the reference phone; insertions are kept separate.
PerTable PerByCategory(std::span<const Alignment> alignments, const CategoryMap &map);

/// Pairs utterances by id (throws listing unmatched ids), aligns and pools.
PerTable PerFromSequences(const std::vector<PhoneSequence> &ref,
                          const std::vector<PhoneSequence> &hyp, const CategoryMap &map);

/// Columns: category ref_phones substitutions deletions errors per; then an
/// "insertions" row and an "overall" row.
void WritePerTable(std::ostream &out, const PerTable &table);

/// Reads the three files and returns the formatted table.
std::string PerReport(const std::string &ref_file, const std::string &hyp_file,
                      const std::string &map_file);

}  // namespace avse

#endif  // AVSE_PERANALYSIS_H_
