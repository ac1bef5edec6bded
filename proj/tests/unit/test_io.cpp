#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "levelscore/error.hpp"
#include "levelscore/io.hpp"
#include "support.hpp"

using namespace levelscore;
using levelscore::testing::slurp;
using levelscore::testing::spit;
using levelscore::testing::TempDir;

TEST(FormatNumber, RoundTripsEveryDouble) {
  std::mt19937_64 rng(113);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    double v;
    const std::uint64_t b = bits(rng);
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(io::parse_number(io::format_number(v), "v"), v);
  }
  EXPECT_EQ(io::format_number(0.1), "0.10000000000000001");
}

TEST(ParseNumber, Strict) {
  EXPECT_EQ(io::parse_number(" 2.5 ", "x"), 2.5);
  EXPECT_THROW(io::parse_number("2.5abc", "x"), Error);
  EXPECT_THROW(io::parse_number("", "x"), Error);
}

TEST(ReadCsv, HeaderDetectionAndBlankLines) {
  TempDir dir("csv");
  spit(dir / "h.csv", "id,predicted,ground_truth\n\na,1,2\nb, 3 ,4\n");
  const io::CsvTable h = io::read_csv(dir / "h.csv");
  EXPECT_EQ(h.header, (std::vector<std::string>{"id", "predicted", "ground_truth"}));
  ASSERT_EQ(h.rows.size(), 2u);
  EXPECT_EQ(h.rows[1][1], "3");
  EXPECT_EQ(h.line_numbers[0], 3u);
  EXPECT_EQ(h.column("ground_truth"), 2u);
  EXPECT_THROW(h.column("missing"), Error);

  spit(dir / "n.csv", "a,1,2\nb,3,4\n");
  const io::CsvTable n = io::read_csv(dir / "n.csv");
  EXPECT_TRUE(n.header.empty());
  EXPECT_EQ(n.rows.size(), 2u);
  EXPECT_THROW(io::read_csv(dir / "absent.csv"), Error);
}

TEST(WriteTextAtomic, ReplacesWholeFile) {
  TempDir dir("atomic");
  io::write_text_atomic(dir / "f.txt", "first version, long");
  io::write_text_atomic(dir / "f.txt", "second");
  EXPECT_EQ(slurp(dir / "f.txt"), "second");
  EXPECT_FALSE(std::filesystem::exists(dir / "f.txt.tmp"));
}
