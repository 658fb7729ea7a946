#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "uwbfuse/curve_table.hpp"

using namespace uwbfuse;

TEST(SnrGrid, DefaultHas71Points) {
  const auto grid = default_snr_grid();
  ASSERT_EQ(grid.size(), 71u);
  EXPECT_EQ(grid.front(), -30.0);
  EXPECT_EQ(grid.back(), 5.0);
  EXPECT_EQ(grid[1], -29.5);
}

TEST(SnrGrid, InvalidArguments) {
  EXPECT_THROW(make_snr_grid(0, 1, 0), std::invalid_argument);
  EXPECT_THROW(make_snr_grid(1, 0, 0.5), std::invalid_argument);
  EXPECT_EQ(make_snr_grid(2, 2, 0.5).size(), 1u);
}

TEST(CurveTable, GridMustIncrease) {
  EXPECT_THROW(CurveTable({0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(CurveTable({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(CurveTable(std::vector<double>{}), std::invalid_argument);
}

TEST(CurveTable, ColumnRules) {
  CurveTable t({-1, 0, 1});
  t.add_column("a", {0.1, 0.2, 0.3});
  EXPECT_THROW(t.add_column("a", {0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(t.add_column("b", {0, 0}), std::invalid_argument);
  EXPECT_TRUE(t.has_column("a"));
  EXPECT_FALSE(t.has_column("b"));
  EXPECT_THROW(static_cast<void>(t.column("b")), std::out_of_range);
}

TEST(CurveTable, CsvFormat) {
  CurveTable t({-30, -29.5});
  t.add_column("MF_pd", {0.00152194918123, 1.0});
  std::ostringstream out;
  t.write_csv(out);
  EXPECT_EQ(out.str(), "snr_db,MF_pd\n-30.00,0.00152194918\n-29.50,1\n");
}

TEST(CurveTable, CsvRoundTrip) {
  CurveTable t(default_snr_grid());
  std::vector<double> a(71), b(71);
  for (int i = 0; i < 71; ++i) {
    a[i] = i / 71.0;
    b[i] = 1.0 / (1 + i * i) + 1e-9 * i;
  }
  t.add_column("x_pd", a);
  t.add_column("y_pe", b);
  std::stringstream io;
  t.write_csv(io);
  const auto back = CurveTable::read_csv(io);
  EXPECT_EQ(back.snr_grid_db(), t.snr_grid_db());
  ASSERT_EQ(back.columns().size(), 2u);
  EXPECT_EQ(back.columns()[0].name, "x_pd");
  for (int i = 0; i < 71; ++i) {
    EXPECT_EQ(format_probability(back.column("x_pd")[i]), format_probability(a[i]));
    EXPECT_EQ(format_probability(back.column("y_pe")[i]), format_probability(b[i]));
  }
  std::ostringstream again;
  back.write_csv(again);
  EXPECT_EQ(again.str(), io.str());
}

TEST(CurveTable, ReadRejectsMalformed) {
  std::istringstream bad_header("snr,x\n1,2\n");
  EXPECT_THROW(CurveTable::read_csv(bad_header), std::runtime_error);
  std::istringstream ragged("snr_db,x\n1,2,3\n");
  EXPECT_THROW(CurveTable::read_csv(ragged), std::runtime_error);
  std::istringstream junk("snr_db,x\n1,abc\n");
  EXPECT_THROW(CurveTable::read_csv(junk), std::runtime_error);
}
