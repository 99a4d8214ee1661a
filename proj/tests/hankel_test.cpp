// Copyright 2026 The SHGM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "test_support.hpp"

namespace shgm {
namespace {

using testing::RandomImage;

TEST(HankelLayoutTest, DefaultShape) {
  const HankelLayout layout;
  EXPECT_EQ(layout.rows(), 3249);
  EXPECT_EQ(layout.cols(), 192);
  EXPECT_EQ(layout.entries(), 3249 * 192);
}

TEST(HankelLayoutTest, RejectsOversizedWindow) {
  EXPECT_THROW((HankelLayout{4, 4, 5}.Validate()), InvalidInput);
  EXPECT_THROW((HankelLayout{4, 4, 0}.Validate()), InvalidInput);
  EXPECT_NO_THROW((HankelLayout{4, 4, 4}.Validate()));
}

// Entry (row, col) is recomputed here from the window geometry alone.
TEST(LiftTest, EntriesMatchWindowGeometry) {
  Rng rng(1);
  const HankelLayout layout{9, 7, 3};
  const ImageTensor patch = RandomImage(9, 7, rng);
  const HankelMatrix m = Lift(patch, layout);
  ASSERT_EQ(m.data.rows(), 7 * 5);
  ASSERT_EQ(m.data.cols(), 27);
  for (int ty = 0; ty < 7; ++ty)
    for (int tx = 0; tx < 5; ++tx)
      for (int c = 0; c < 3; ++c)
        for (int dy = 0; dy < 3; ++dy)
          for (int dx = 0; dx < 3; ++dx)
            EXPECT_EQ(m.data(ty * 5 + tx, c * 9 + dy * 3 + dx),
                      patch.at(ty + dy, tx + dx, c));
}

TEST(LiftTest, RejectsWrongSizeAndNonFinite) {
  const HankelLayout layout{8, 8, 2};
  EXPECT_THROW(Lift(ImageTensor(8, 7), layout), InvalidInput);
  ImageTensor bad(8, 8);
  bad.at(3, 3, 1) = std::nan("");
  EXPECT_THROW(Lift(bad, layout), InvalidInput);
}

TEST(AdjointTest, RoundTripIsExact) {
  Rng rng(2);
  const HankelLayout layout;
  for (int t = 0; t < 5; ++t) {
    const ImageTensor patch = RandomImage(64, 64, rng);
    EXPECT_EQ(Adjoint(Lift(patch, layout)), patch);
  }
}

// Independent oracle: plain sum / count per pixel.
TEST(AdjointTest, AveragesEveryCopyOfAPixel) {
  Rng rng(3);
  const HankelLayout layout{6, 5, 3};
  HankelMatrix m{layout, RowMatrix(layout.rows(), layout.cols())};
  for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = rng.Normal();
  std::vector<double> sum(6 * 5 * 3, 0.0), count(6 * 5 * 3, 0.0);
  const int nx = 3;
  for (Eigen::Index r = 0; r < m.data.rows(); ++r)
    for (int c = 0; c < 3; ++c)
      for (int dy = 0; dy < 3; ++dy)
        for (int dx = 0; dx < 3; ++dx) {
          const int y = static_cast<int>(r / nx) + dy;
          const int x = static_cast<int>(r % nx) + dx;
          const int p = (y * 5 + x) * 3 + c;
          sum[p] += m.data(r, c * 9 + dy * 3 + dx);
          count[p] += 1.0;
        }
  const ImageTensor out = Adjoint(m);
  for (std::size_t p = 0; p < sum.size(); ++p)
    EXPECT_NEAR(out.data()[p], sum[p] / count[p], 1e-12);
}

TEST(AdjointTest, LiftOfAdjointIsIdempotent) {
  Rng rng(4);
  const HankelLayout layout{10, 10, 4};
  HankelMatrix m{layout, RowMatrix(layout.rows(), layout.cols())};
  for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = rng.Normal();
  const HankelMatrix once = Lift(Adjoint(m), layout);
  const HankelMatrix twice = Lift(Adjoint(once), layout);
  EXPECT_EQ(once.data, twice.data);
}

TEST(MultiplicityTest, CornersCenterAndTotal) {
  const HankelLayout layout;
  const ImageTensor counts = MultiplicityMap(layout);
  EXPECT_EQ(counts.at(0, 0, 0), 1.0);
  EXPECT_EQ(counts.at(63, 63, 2), 1.0);
  EXPECT_EQ(counts.at(32, 32, 0), 64.0);
  EXPECT_EQ(counts.at(0, 32, 1), 8.0);
  double total = 0.0;
  for (double v : counts.data()) total += v;
  EXPECT_EQ(total, static_cast<double>(layout.entries()));
}

TEST(RankTest, ConstantPatchLiftsToRankOne) {
  ImageTensor patch(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      patch.at(y, x, 0) = 0.2;
      patch.at(y, x, 1) = 0.5;
      patch.at(y, x, 2) = 0.9;
    }
  const HankelMatrix m = Lift(patch, HankelLayout{});
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m.data);
  const auto s = svd.singularValues();
  EXPECT_GT(s[0], 1.0);
  EXPECT_LT(s[1], 1e-10 * s[0]);
}

TEST(FoldTest, DefaultGeometry) {
  const FoldSpec spec = MakeFoldSpec(HankelLayout{}, 192, 192);
  EXPECT_EQ(spec.fold_c, 17);
  EXPECT_EQ(spec.pad_tail, 2880);
  EXPECT_EQ(spec.size(), 17 * 192 * 192);
}

TEST(FoldTest, ExactEntryCountNeedsNoPad) {
  const FoldSpec spec = MakeFoldSpec(600, 10, 20);
  EXPECT_EQ(spec.fold_c, 3);
  EXPECT_EQ(spec.pad_tail, 0);
}

TEST(FoldTest, UnfoldInvertsFoldBitExactly) {
  Rng rng(5);
  const HankelLayout layout;
  HankelMatrix m{layout, RowMatrix(layout.rows(), layout.cols())};
  for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = rng.Normal();
  const FoldedTensor t = Fold(m, 192, 192);
  EXPECT_EQ(t.data.tail(2880).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(Unfold(t, layout).data, m.data);
  // (a, b, c) addressing follows row-major entry order
  EXPECT_EQ(t.at(0, 1, 0), m.data(0, 1));
  EXPECT_EQ(t.at(1, 0, 0), m.data(1, 0));
  EXPECT_EQ(t.at(0, 0, 1), m.data.data()[192 * 192]);
}

TEST(FoldTest, UnfoldIgnoresPadAndChecksShape) {
  const HankelLayout layout{8, 8, 2};
  Rng rng(6);
  const HankelMatrix m = Lift(RandomImage(8, 8, rng), layout);
  FoldedTensor t = Fold(m, 12, 12);
  t.data.tail(t.spec.pad_tail).setConstant(5.0);
  EXPECT_EQ(Unfold(t, layout).data, m.data);
  FoldedTensor wrong = t;
  wrong.data.conservativeResize(t.data.size() - 1);
  EXPECT_THROW(Unfold(wrong, layout), InvalidInput);
  EXPECT_THROW(Unfold(t, HankelLayout{8, 8, 3}), InvalidInput);
}

TEST(DumpTest, RoundTripAndLittleEndianHeader) {
  Rng rng(7);
  const HankelLayout layout{5, 6, 2};
  const HankelMatrix m = Lift(RandomImage(5, 6, rng), layout);
  std::stringstream ss;
  WriteHankelDump(ss, m);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 6 * 4 + m.data.size() * 8);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), m.data.rows());
  EXPECT_EQ(bytes[1], 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), m.data.cols());
  const HankelMatrix back = ReadHankelDump(ss);
  EXPECT_EQ(back.layout, layout);
  EXPECT_EQ(back.data, m.data);
}

TEST(DumpTest, RejectsTruncatedStream) {
  std::stringstream ss;
  WriteHankelDump(ss, Lift(ImageTensor(4, 4, 0.5), HankelLayout{4, 4, 2}));
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream cut(bytes);
  EXPECT_THROW(ReadHankelDump(cut), InvalidInput);
}

}  // namespace
}  // namespace shgm
