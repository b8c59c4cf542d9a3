// tests/peranalysis_test.cc

// Copyright 2026  The AVSE-KD Authors

// See ../COPYING for clarification regarding multiple authors
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

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "avse/error.h"
#include "per_oracle.h"
#include "test_util.h"

namespace avse {
namespace {

using Seq = std::vector<std::string>;

CategoryMap SmallMap() {
  CategoryMap m;
  m.category_of = {{"p", "Labial"}, {"b", "Labial"}, {"a", "Vowels"}, {"i", "Vowels"},
                   {"k", "Velar"},  {"g", "Velar"},  {"t", "Alveolar"}, {"sil", "Silence"}};
  return m;
}

TEST(AlignTest, Examples) {
  const Seq abc = {"a", "b", "c"};
  const Alignment same = Align(abc, abc);
  EXPECT_EQ(same.distance, 0u);
  for (const auto &p : same.pairs) EXPECT_EQ(p.op, EditOp::kMatch);

  const Alignment del = Align(abc, Seq{"a", "c"});
  EXPECT_EQ(del.distance, 1u);
  ASSERT_EQ(del.pairs.size(), 3u);
  EXPECT_EQ(del.pairs[1].op, EditOp::kDelete);
  EXPECT_EQ(del.pairs[1].ref, "b");
  EXPECT_TRUE(del.pairs[1].hyp.empty());

  const Alignment sub = Align(Seq{"x"}, Seq{"y"});
  ASSERT_EQ(sub.pairs.size(), 1u);
  EXPECT_EQ(sub.pairs[0].op, EditOp::kSubstitute);

  const Alignment ins = Align(Seq{}, Seq{"a", "b"});
  EXPECT_EQ(ins.distance, 2u);
  for (const auto &p : ins.pairs) EXPECT_EQ(p.op, EditOp::kInsert);
}

TEST(AlignTest, ExhaustiveAgainstRecursiveOracleUpToLengthFour) {
  const auto seqs = testing::AllSequences(4, 4);
  std::size_t checked = 0;
  for (const auto &r : seqs)
    for (const auto &h : seqs) {
      const Alignment a = Align(r, h);
      ASSERT_EQ(a.distance, testing::RecursiveEditDistance(r, h));
      ASSERT_TRUE(testing::AlignmentConsistent(a, r, h));
      ++checked;
    }
  EXPECT_EQ(checked, 341u * 341u);
}

TEST(PerTest, VelarSubstitutionExample) {
  const CategoryMap map = SmallMap();
  const Alignment a = Align(Seq{"p", "a", "k"}, Seq{"p", "a", "t"});
  const PerTable t = PerByCategory({&a, 1}, map);
  EXPECT_EQ(t.Find("Velar")->Per(), 100.0);
  EXPECT_EQ(t.Find("Labial")->Per(), 0.0);
  EXPECT_EQ(t.Find("Vowels")->Per(), 0.0);
  EXPECT_EQ(t.insertions, 0u);
  EXPECT_NEAR(t.OverallPer(), 100.0 / 3, 1e-12);
}

TEST(PerTest, DeletionAndInsertionAttribution) {
  const CategoryMap map = SmallMap();
  const Alignment del = Align(Seq{"k"}, Seq{});
  EXPECT_EQ(PerByCategory({&del, 1}, map).Find("Velar")->Per(), 100.0);
  // Insertions do not touch any category.
  const Alignment ins = Align(Seq{"a"}, Seq{"a", "k", "k"});
  const PerTable t = PerByCategory({&ins, 1}, map);
  EXPECT_EQ(t.insertions, 2u);
  EXPECT_EQ(t.Find("Vowels")->Per(), 0.0);
  EXPECT_EQ(t.Find("Velar")->ref_phones, 0u);
  EXPECT_EQ(t.Find("Velar")->Per(), 0.0);
  EXPECT_DOUBLE_EQ(t.OverallPer(), 200.0);
}

TEST(PerTest, UnmappedPhoneIsNamed) {
  const CategoryMap map = SmallMap();
  const Alignment a = Align(Seq{"p", "zz"}, Seq{"p"});
  try {
    PerByCategory({&a, 1}, map);
    FAIL();
  } catch (const InvalidArgument &e) {
    EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
  }
  // Unmapped hypothesis phones are rejected too.
  const Alignment b = Align(Seq{"p"}, Seq{"qq"});
  EXPECT_THROW(PerByCategory({&b, 1}, map), InvalidArgument);
}

std::vector<PhoneSequence> RandomUtterances(std::size_t n, std::uint32_t seed, bool hyp,
                                            const std::vector<PhoneSequence> *ref = nullptr) {
  const Seq inventory = {"p", "b", "a", "i", "k", "g", "t", "sil"};
  std::mt19937 rng(seed);
  std::vector<PhoneSequence> out;
  for (std::size_t u = 0; u < n; ++u) {
    PhoneSequence s;
    s.utt_id = "u" + std::to_string(u);
    if (!hyp) {
      const std::size_t len = 1 + rng() % 12;
      for (std::size_t i = 0; i < len; ++i) s.phones.push_back(inventory[rng() % inventory.size()]);
    } else {
      // Corrupt the reference: substitutions, deletions and insertions.
      for (const auto &p : (*ref)[u].phones) {
        const unsigned r = rng() % 10;
        if (r == 0) continue;
        s.phones.push_back(r == 1 ? inventory[rng() % inventory.size()] : p);
        if (r == 2) s.phones.push_back(inventory[rng() % inventory.size()]);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

TEST(PerTest, PooledCountsMatchGlobalRecount) {
  const CategoryMap map = SmallMap();
  const auto ref = RandomUtterances(100, 1, false);
  const auto hyp = RandomUtterances(100, 2, true, &ref);
  const PerTable t = PerFromSequences(ref, hyp, map);

  // Recount straight from per-utterance alignments.
  std::map<std::string, std::array<std::size_t, 3>> counts;  // N, S, D
  std::size_t ins = 0, n = 0, s = 0, d = 0;
  for (std::size_t u = 0; u < ref.size(); ++u) {
    const Alignment a = Align(ref[u].phones, hyp[u].phones);
    ASSERT_TRUE(testing::AlignmentConsistent(a, ref[u].phones, hyp[u].phones));
    for (const auto &p : a.pairs) {
      if (p.op == EditOp::kInsert) {
        ++ins;
        continue;
      }
      auto &c = counts[map.category_of.at(p.ref)];
      ++c[0], ++n;
      if (p.op == EditOp::kSubstitute) ++c[1], ++s;
      if (p.op == EditOp::kDelete) ++c[2], ++d;
    }
  }
  EXPECT_EQ(t.insertions, ins);
  EXPECT_EQ(t.ref_phones, n);
  EXPECT_EQ(t.substitutions, s);
  EXPECT_EQ(t.deletions, d);
  EXPECT_DOUBLE_EQ(t.OverallPer(), 100.0 * (s + d + ins) / n);
  for (const auto &[cat, c] : counts) {
    const CategoryCounts *row = t.Find(cat);
    ASSERT_NE(row, nullptr) << cat;
    EXPECT_EQ(row->ref_phones, c[0]) << cat;
    EXPECT_EQ(row->substitutions, c[1]) << cat;
    EXPECT_EQ(row->deletions, c[2]) << cat;
    EXPECT_DOUBLE_EQ(row->Per(), 100.0 * (c[1] + c[2]) / c[0]);
    EXPECT_LE(row->Per(), 100.0);
  }

  // Pooling, not averaging; and utterance order does not matter.
  auto rref = ref, rhyp = hyp;
  std::reverse(rref.begin(), rref.end());
  std::shuffle(rhyp.begin(), rhyp.end(), std::mt19937(5));
  std::ostringstream a, b;
  WritePerTable(a, t);
  WritePerTable(b, PerFromSequences(rref, rhyp, map));
  EXPECT_EQ(a.str(), b.str());
}

TEST(PerTest, EmptyHypothesesGiveFullErrors) {
  const CategoryMap map = SmallMap();
  const auto ref = RandomUtterances(10, 3, false);
  std::vector<PhoneSequence> hyp;
  for (const auto &r : ref) hyp.push_back({r.utt_id, {}});
  const PerTable t = PerFromSequences(ref, hyp, map);
  for (const auto &c : t.categories)
    if (c.ref_phones) EXPECT_EQ(c.Per(), 100.0) << c.category;
}

TEST(PerTest, MissingCounterpartsAreListed) {
  const CategoryMap map = SmallMap();
  std::vector<PhoneSequence> ref = {{"u1", {"p"}}, {"u2", {"a"}}};
  std::vector<PhoneSequence> hyp = {{"u1", {"p"}}, {"u3", {"a"}}};
  try {
    PerFromSequences(ref, hyp, map);
    FAIL();
  } catch (const InvalidArgument &e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("u2"), std::string::npos);
    EXPECT_NE(what.find("u3"), std::string::npos);
  }
}

TEST(PerTest, FileFormatsAndReport) {
  std::istringstream map_text("# phone map\np\tLabial\n\nk\tVelar\na\tVowels\nzh\tPostalveolar\n");
  const CategoryMap map = ParseCategoryMap(map_text);
  EXPECT_EQ(map.Lookup("k"), "Velar");
  const auto order = map.OrderedCategories();
  EXPECT_EQ(order.front(), "Silence");
  EXPECT_EQ(order.back(), "Postalveolar");
  std::istringstream bad("p Labial extra\n");
  EXPECT_THROW(ParseCategoryMap(bad), IoError);

  std::istringstream seq_text("u1 p a k\nu2\tk  a\n");
  const auto seqs = ParsePhoneSequences(seq_text);
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(seqs[1].phones, (Seq{"k", "a"}));

  const auto dir = testing::ScratchDir("per_report");
  auto write = [&](const char *name, const char *text) {
    std::ofstream((dir / name).string()) << text;
    return (dir / name).string();
  };
  const std::string report = PerReport(write("ref.txt", "u1 p a k\n"), write("hyp.txt", "u1 p a t\n"),
                                        write("map.tsv", "p\tLabial\na\tVowels\nk\tVelar\nt\tAlveolar\n"));
  EXPECT_NE(report.find("Velar\t1\t1\t0\t1\t100"), std::string::npos) << report;
  EXPECT_NE(report.find("insertions\t3\t0\t0\t0\t0"), std::string::npos) << report;
  EXPECT_EQ(report, PerReport((dir / "ref.txt").string(), (dir / "hyp.txt").string(),
                              (dir / "map.tsv").string()));
}

}  // namespace
}  // namespace avse
