// core/src/peranalysis.cc

// Copyright 2026  The AVSE-KD Authors

// See ../../COPYING for clarification regarding multiple authors
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

#include "avse/peranalysis.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "avse/error.h"

namespace avse {
namespace {

std::string Num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::ifstream OpenText(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

}  // namespace

Alignment Align(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t & { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }

  Alignment out;
  out.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      out.pairs.push_back({EditOp::kMatch, ref[i - 1], hyp[j - 1]});
      --i, --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      out.pairs.push_back({EditOp::kSubstitute, ref[i - 1], hyp[j - 1]});
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      out.pairs.push_back({EditOp::kDelete, ref[i - 1], ""});
      --i;
    } else {
      out.pairs.push_back({EditOp::kInsert, "", hyp[j - 1]});
      --j;
    }
  }
  std::reverse(out.pairs.begin(), out.pairs.end());
  return out;
}

const std::string &CategoryMap::Lookup(const std::string &phone) const {
  auto it = category_of.find(phone);
  if (it == category_of.end()) throw InvalidArgument("phone '" + phone + "' has no category");
  return it->second;
}

std::vector<std::string> CategoryMap::OrderedCategories() const {
  std::vector<std::string> out(std::begin(kPhoneCategories), std::end(kPhoneCategories));
  std::set<std::string> extra;
  for (const auto &kv : category_of)
    if (std::find(out.begin(), out.end(), kv.second) == out.end()) extra.insert(kv.second);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

CategoryMap ParseCategoryMap(std::istream &in) {
  CategoryMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw IoError("category map line " + std::to_string(lineno) + ": expected phone<TAB>category");
    const std::string phone = line.substr(0, tab);
    const std::string category = line.substr(tab + 1);
    auto [it, inserted] = map.category_of.emplace(phone, category);
    if (!inserted && it->second != category)
      throw IoError("phone '" + phone + "' mapped to both " + it->second + " and " + category);
  }
  return map;
}

CategoryMap ReadCategoryMap(const std::string &path) {
  std::ifstream in = OpenText(path);
  return ParseCategoryMap(in);
}

std::vector<PhoneSequence> ParsePhoneSequences(std::istream &in) {
  std::vector<PhoneSequence> out;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    PhoneSequence seq;
    if (!(fields >> seq.utt_id)) continue;
    if (!seen.insert(seq.utt_id).second) throw IoError("duplicate utterance id '" + seq.utt_id + "'");
    std::string phone;
    while (fields >> phone) seq.phones.push_back(phone);
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<PhoneSequence> ReadPhoneFile(const std::string &path) {
  std::ifstream in = OpenText(path);
  return ParsePhoneSequences(in);
}

double CategoryCounts::Per() const {
  return ref_phones ? 100.0 * static_cast<double>(errors()) / static_cast<double>(ref_phones) : 0.0;
}

double PerTable::OverallPer() const {
  return ref_phones ? 100.0 * static_cast<double>(substitutions + deletions + insertions) /
                          static_cast<double>(ref_phones)
                    : 0.0;
}

const CategoryCounts *PerTable::Find(const std::string &category) const {
  for (const auto &c : categories)
    if (c.category == category) return &c;
  return nullptr;
}

PerTable PerByCategory(std::span<const Alignment> alignments, const CategoryMap &map) {
  PerTable table;
  std::map<std::string, CategoryCounts> counts;
  for (const Alignment &a : alignments)
    for (const AlignedPair &p : a.pairs) {
      if (p.op == EditOp::kInsert) {
        map.Lookup(p.hyp);
        ++table.insertions;
        continue;
      }
      if (p.op == EditOp::kSubstitute) map.Lookup(p.hyp);
      CategoryCounts &c = counts[map.Lookup(p.ref)];
      ++c.ref_phones;
      ++table.ref_phones;
      if (p.op == EditOp::kSubstitute) {
        ++c.substitutions;
        ++table.substitutions;
      } else if (p.op == EditOp::kDelete) {
        ++c.deletions;
        ++table.deletions;
      }
    }
  for (const std::string &category : map.OrderedCategories()) {
    CategoryCounts c = counts[category];
    c.category = category;
    table.categories.push_back(c);
  }
  return table;
}

PerTable PerFromSequences(const std::vector<PhoneSequence> &ref,
                          const std::vector<PhoneSequence> &hyp, const CategoryMap &map) {
  std::map<std::string, const PhoneSequence *> by_id;
  for (const auto &h : hyp) by_id[h.utt_id] = &h;
  std::vector<std::string> missing_hyp, missing_ref;
  std::set<std::string> ref_ids;
  for (const auto &r : ref) {
    ref_ids.insert(r.utt_id);
    if (!by_id.count(r.utt_id)) missing_hyp.push_back(r.utt_id);
  }
  for (const auto &h : hyp)
    if (!ref_ids.count(h.utt_id)) missing_ref.push_back(h.utt_id);
  if (!missing_hyp.empty() || !missing_ref.empty()) {
    std::string msg = "utterance ids do not match;";
    if (!missing_hyp.empty()) {
      msg += " missing from hypothesis:";
      for (const auto &id : missing_hyp) msg += " " + id;
    }
    if (!missing_ref.empty()) {
      msg += (missing_hyp.empty() ? "" : ";");
      msg += " missing from reference:";
      for (const auto &id : missing_ref) msg += " " + id;
    }
    throw InvalidArgument(msg);
  }
  std::vector<Alignment> alignments;
  for (const auto &r : ref) alignments.push_back(Align(r.phones, by_id[r.utt_id]->phones));
  return PerByCategory(alignments, map);
}

void WritePerTable(std::ostream &out, const PerTable &t) {
  out << "category\tref_phones\tsubstitutions\tdeletions\terrors\tper\n";
  for (const auto &c : t.categories)
    out << c.category << '\t' << c.ref_phones << '\t' << c.substitutions << '\t' << c.deletions
        << '\t' << c.errors() << '\t' << Num(c.Per()) << '\n';
  const double ins_rate =
      t.ref_phones ? 100.0 * static_cast<double>(t.insertions) / static_cast<double>(t.ref_phones) : 0.0;
  out << "insertions\t" << t.ref_phones << "\t0\t0\t" << t.insertions << '\t' << Num(ins_rate) << '\n';
  out << "overall\t" << t.ref_phones << '\t' << t.substitutions << '\t' << t.deletions << '\t'
      << (t.substitutions + t.deletions + t.insertions) << '\t' << Num(t.OverallPer()) << '\n';
}

std::string PerReport(const std::string &ref_file, const std::string &hyp_file,
                      const std::string &map_file) {
  const PerTable table =
      PerFromSequences(ReadPhoneFile(ref_file), ReadPhoneFile(hyp_file), ReadCategoryMap(map_file));
  std::ostringstream out;
  WritePerTable(out, table);
  return out.str();
}

}  // namespace avse
