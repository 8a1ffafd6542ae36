/*
 * Copyright 2026 The relstab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "relstab/data.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "relstab/common.h"

namespace relstab {
namespace {

std::vector<ColumnSpec> two_feature_schema() {
  return {{"a", ColumnKind::kContinuous, ColumnRole::kFeature},
          {"b", ColumnKind::kContinuous, ColumnRole::kFeature},
          {"y", ColumnKind::kBinary, ColumnRole::kLabel}};
}

TEST(Common, NormOrders) {
  Vector v(2);
  v << 3.0, -4.0;
  EXPECT_DOUBLE_EQ(lp_norm(v, NormOrder::kL1), 7.0);
  EXPECT_DOUBLE_EQ(lp_norm(v, NormOrder::kL2), 5.0);
  EXPECT_DOUBLE_EQ(lp_norm(v, NormOrder::kLinf), 4.0);
  EXPECT_EQ(parse_norm_order("inf"), NormOrder::kLinf);
  EXPECT_EQ(parse_norm_order("1"), NormOrder::kL1);
  EXPECT_THROW(parse_norm_order("3"), InvalidInput);
}

TEST(Common, DerivedSeedsDiffer) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Csv, ParsesSmallFile) {
  const Dataset ds = parse_csv("a,b,y\n1.5,2,0\n-1,0.25,1\n3,4,1\n", two_feature_schema());
  EXPECT_EQ(ds.size(), 3);
  EXPECT_EQ(ds.dim(), 2);
  EXPECT_EQ(ds.num_classes(), 2);
  EXPECT_DOUBLE_EQ(ds.x()(1, 1), 0.25);
  EXPECT_EQ(ds.y(), (std::vector<Label>{0, 1, 1}));
}

TEST(Csv, BinaryViolationNamesColumnAndRow) {
  auto schema = two_feature_schema();
  schema.insert(schema.begin() + 2, {"flag", ColumnKind::kBinary, ColumnRole::kFeature});
  try {
    parse_csv("a,b,flag,y\n1,2,0,0\n1,2,2,1\n", schema);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("flag"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("row"), std::string::npos) << msg;
  }
}

TEST(Csv, MissingColumnListed) {
  try {
    parse_csv("a,y\n1,0\n2,1\n", two_feature_schema());
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
}

TEST(Csv, NonNumericCellRejected) {
  EXPECT_THROW(parse_csv("a,b,y\n1,x,0\n2,3,1\n", two_feature_schema()), InvalidInput);
}

TEST(Schema, ParsesJson) {
  const auto schema = parse_schema(
      R"([{"name":"a","kind":"continuous","role":"feature"},{"name":"y","kind":"binary","role":"label"}])");
  ASSERT_EQ(schema.size(), 2u);
  EXPECT_EQ(schema[1].role, ColumnRole::kLabel);
  EXPECT_THROW(parse_schema(R"([{"name":"a","kind":"weird","role":"feature"}])"), InvalidInput);
}

Dataset indexed(int n) {
  Matrix x(n, 1);
  std::vector<Label> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x(i, 0) = i;
    y[static_cast<std::size_t>(i)] = i % 2;
  }
  return Dataset(x, y, {{"v", ColumnKind::kContinuous, ColumnRole::kFeature}});
}

std::vector<std::int64_t> ids(const Dataset& d) { return d.row_ids(); }

TEST(Split, SizesFollowRatios) {
  const Splits s = split(indexed(100), {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(s.train.size(), 80);
  EXPECT_EQ(s.val.size(), 10);
  EXPECT_EQ(s.test.size(), 10);
}

TEST(Split, DisjointAndCovering) {
  const Splits s = split(indexed(137), {0.7, 0.15, 0.15}, 3);
  std::set<std::int64_t> all;
  for (const Dataset* d : {&s.train, &s.val, &s.test}) {
    for (auto id : ids(*d)) EXPECT_TRUE(all.insert(id).second) << "duplicate row " << id;
  }
  EXPECT_EQ(all.size(), 137u);
}

TEST(Split, DeterministicPerSeed) {
  const Dataset ds = indexed(100);
  EXPECT_EQ(ids(split(ds, {0.8, 0.1, 0.1}, 7).train), ids(split(ds, {0.8, 0.1, 0.1}, 7).train));
  EXPECT_NE(ids(split(ds, {0.8, 0.1, 0.1}, 7).train), ids(split(ds, {0.8, 0.1, 0.1}, 8).train));
}

TEST(Split, RejectsBadRatiosAndTinyData) {
  EXPECT_THROW(split(indexed(100), {0.8, 0.3, 0.1}, 1), InvalidInput);
  EXPECT_THROW(split(indexed(5), {0.8, 0.1, 0.1}, 1), InvalidInput);
}

TEST(Standardize, PopulationStatistics) {
  Matrix x(2, 3);
  x << 0, 5, 0,  //
      2, 5, 1;
  const Dataset ds(x, {0, 1},
                   {{"c", ColumnKind::kContinuous, ColumnRole::kFeature},
                    {"k", ColumnKind::kContinuous, ColumnRole::kFeature},
                    {"b", ColumnKind::kBinary, ColumnRole::kFeature}});
  const Standardizer s = fit_standardizer(ds);
  EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
  EXPECT_TRUE(s.degenerate[1]);
  EXPECT_FALSE(s.scaled[1]);
  EXPECT_FALSE(s.scaled[2]);
  const Dataset z = ds.standardized(s);
  EXPECT_DOUBLE_EQ(z.x()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(z.x()(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(z.x()(0, 1), 5.0);
  EXPECT_DOUBLE_EQ(z.x()(1, 2), 1.0);
  const Vector back = s.inverse(z.row(1));
  EXPECT_TRUE(back.isApprox(ds.row(1)));
}

TEST(Circles, ZeroNoiseRadii) {
  const Dataset ds = make_circles(8, 0.0, 0.5, 1);
  ASSERT_EQ(ds.size(), 8);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const double r = ds.row(i).norm();
    const double expected = ds.y()[static_cast<std::size_t>(i)] == 0 ? 1.0 : 0.5;
    EXPECT_NEAR(r, expected, 1e-12);
  }
}

TEST(Circles, NoisyMeanRadius) {
  const Dataset ds = make_circles(400, 0.05, 0.5, 11);
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (ds.y()[static_cast<std::size_t>(i)] != 0) continue;
    sum += ds.row(i).norm();
    ++count;
  }
  EXPECT_EQ(count, 200);
  EXPECT_GE(sum / count, 0.97);
  EXPECT_LE(sum / count, 1.03);
}

TEST(Circles, Deterministic) {
  EXPECT_EQ(make_circles(100, 0.05, 0.5, 4).x(), make_circles(100, 0.05, 0.5, 4).x());
  EXPECT_NE(make_circles(100, 0.05, 0.5, 4).x(), make_circles(100, 0.05, 0.5, 5).x());
}

TEST(Blobs, SeparatedClasses) {
  const Dataset ds = make_blobs(200, 3, 5.0, 0.5, 2);
  EXPECT_EQ(ds.dim(), 3);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const double s = ds.row(i).sum();
    EXPECT_EQ(s > 0, ds.y()[static_cast<std::size_t>(i)] == 1);
  }
}

TEST(DatasetTest, RejectsBadLabels) {
  Matrix x(2, 1);
  x << 1, 2;
  EXPECT_THROW(Dataset(x, {0, 0}, {{"v", ColumnKind::kContinuous, ColumnRole::kFeature}}),
               InvalidInput);
  EXPECT_THROW(Dataset(x, {0, -1}, {{"v", ColumnKind::kContinuous, ColumnRole::kFeature}}),
               InvalidInput);
}

}  // namespace
}  // namespace relstab
