#include "kgrag/text_util.h"

#include <gtest/gtest.h>

#include "support/fixtures.h"

namespace kgrag::text {
namespace {

TEST(TextUtil, TrimAndCollapse) {
  EXPECT_EQ(trim("  a b \t\n"), "a b");
  EXPECT_EQ(trim(""), "");
  EXPECT_EQ(collapse_whitespace("  Age related \t  macular\n degeneration "), "Age related macular degeneration");
  EXPECT_EQ(collapse_whitespace(" \t "), "");
}

TEST(TextUtil, LowerLeavesNonAsciiBytes) {
  EXPECT_EQ(to_lower("AMD \xC3\x89tude"), "amd \xC3\x89tude");
}

TEST(TextUtil, SplitLinesDropsCarriageReturns) {
  auto lines = split_lines("a\r\nb\n\nc\n");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[1], "b");
  EXPECT_EQ(lines[2], "");
  EXPECT_EQ(lines[3], "c");
}

TEST(TextUtil, FileRoundTripCreatesParents) {
  kgrag::testing::TempDir dir;
  auto path = dir / "nested/deeper/file.bin";
  std::string payload("x\0y\n", 4);
  write_file(path, payload);
  EXPECT_EQ(read_file(path), payload);
  EXPECT_THROW(read_file(dir / "missing"), std::runtime_error);
}

TEST(TextUtil, HexEncode) { EXPECT_EQ(hex_encode(std::string("\x00\xff\x10", 3)), "00ff10"); }

}  // namespace
}  // namespace kgrag::text
