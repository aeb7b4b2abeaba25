#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "pmcoa/error.hpp"
#include "pmcoa/util/csv.hpp"
#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/gzip.hpp"
#include "pmcoa/util/hash.hpp"
#include "pmcoa/util/jpeg.hpp"
#include "pmcoa/util/quantile.hpp"
#include "pmcoa/util/rng.hpp"
#include "pmcoa/util/tar.hpp"
#include "pmcoa/util/text.hpp"

namespace pmcoa::util {
namespace {

TEST(Hash, KnownSha256Vectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 s;
  s.update("a");
  s.update("bc");
  EXPECT_EQ(s.hex_digest(), sha256_hex("abc"));
}

TEST(Quantile, TypeSevenMatchesHandComputation) {
  // numpy.quantile([1,2,3,4], [.25,.5,.75]) -> 1.75, 2.5, 3.25
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.75), 3.25);
  const Summary s = summarize({10, 2});
  EXPECT_DOUBLE_EQ(s.median, 6);
  EXPECT_DOUBLE_EQ(s.total, 12);
  EXPECT_DOUBLE_EQ(s.iqr, s.q3 - s.q1);
  EXPECT_EQ(summarize({}).count, 0u);
}

TEST(Csv, QuotedFieldsAndErrors) {
  const auto rows = parse_csv("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\n\"multi\nline\",z\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "x,1");
  EXPECT_EQ(rows[1][1], "he said \"hi\"");
  EXPECT_EQ(rows[2][0], "multi\nline");
  try {
    parse_csv("a,b\nc,\"unterminated\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), 2);
  }
  EXPECT_EQ(csv_line({"a", "b,c", "d\"e"}), "a,\"b,c\",\"d\"\"e\"");
}

TEST(Text, UnicodeWhitespace) {
  EXPECT_EQ(split_unicode_whitespace("a b　 c\t").size(), 3u);
  EXPECT_EQ(code_point_count("héllo"), 5u);
  EXPECT_EQ(collapse_whitespace("  a \n\n b  "), "a b");
}

TEST(Gzip, RoundTripAndCorruption) {
  const std::string raw(10000, 'x');
  const std::string z = gzip(raw);
  EXPECT_EQ(gunzip(z), raw);
  EXPECT_EQ(gzip(raw), z);  // deterministic
  EXPECT_THROW(gunzip(z.substr(0, z.size() / 2)), ParseError);
  EXPECT_THROW(gunzip("not gzip at all"), ParseError);
}

TEST(Tar, RoundTripLongNamesAndTruncation) {
  std::ostringstream os;
  TarWriter w(os);
  const std::string long_name = std::string(150, 'n') + ".txt";
  w.add_file("a.txt", "hello");
  w.add_file(long_name, std::string(1000, 'z'));
  w.add_file("empty", "");
  w.finish();
  const std::string bytes = os.str();
  EXPECT_EQ(bytes.size() % 512, 0u);
  EXPECT_EQ(w.bytes_written(), bytes.size());

  auto r = make_memory_tar_reader(bytes);
  auto e1 = r.next();
  ASSERT_TRUE(e1);
  EXPECT_EQ(e1->name, "a.txt");
  EXPECT_EQ(r.read_data(), "hello");
  auto e2 = r.next();
  ASSERT_TRUE(e2);
  EXPECT_EQ(e2->name, long_name);
  EXPECT_EQ(r.read_data(), std::string(1000, 'z'));
  auto e3 = r.next();
  ASSERT_TRUE(e3);
  EXPECT_EQ(e3->size, 0u);
  EXPECT_FALSE(r.next());

  auto t = make_memory_tar_reader(std::string_view(bytes).substr(0, 700));
  ASSERT_TRUE(t.next());
  t.read_data();
  EXPECT_THROW(
      {
        t.next();
        t.read_data();
      },
      ParseError);

  std::string corrupt = bytes;
  corrupt[10] ^= 0x55;
  auto c = make_memory_tar_reader(corrupt);
  EXPECT_THROW(c.next(), ParseError);
}

TEST(Jpeg, ProbeSize) {
  const auto sz = probe_image_size(testing::fake_jpeg(640, 480, 1));
  ASSERT_TRUE(sz);
  EXPECT_EQ(sz->width, 640);
  EXPECT_EQ(sz->height, 480);
  EXPECT_FALSE(probe_image_size("garbage"));
}

TEST(Rng, DeterministicAndUniformBelow) {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  SplitMix64 r(7);
  std::vector<int> counts(3);
  for (int i = 0; i < 30000; ++i) ++counts[r.below(3)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Fs, AtomicWriteAndDurableAppend) {
  testing::TempDir dir;
  write_file_atomic(dir / "x.txt", "one");
  write_file_atomic(dir / "x.txt", "two");
  EXPECT_EQ(read_file(dir / "x.txt"), "two");
  append_line_durable(dir / "log", "a");
  append_line_durable(dir / "log", "b");
  EXPECT_EQ(read_file(dir / "log"), "a\nb\n");
  EXPECT_EQ(list_files(dir.path()).size(), 2u);
  EXPECT_EQ(lower_extension("A/B.JPG"), "jpg");
}

}  // namespace
}  // namespace pmcoa::util
