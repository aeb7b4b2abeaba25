#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "fixtures.hpp"
#include "pmcoa/error.hpp"
#include "pmcoa/ingest/extract.hpp"
#include "pmcoa/ingest/fetch.hpp"
#include "pmcoa/ingest/file_list.hpp"
#include "pmcoa/ingest/rate_limiter.hpp"
#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/gzip.hpp"
#include "pmcoa/util/tar.hpp"

namespace pmcoa::ingest {
namespace {

using testing::MockTransport;
using testing::TempDir;
namespace fs = std::filesystem;

constexpr const char* kHeader = "File,Citation,Accession_ID,Last Updated (YYYY-MM-DD HH:MM:SS),Date,PMID,License\n";

TEST(FileList, SingleRowProjectsFields) {
  const std::string csv = std::string(kHeader) +
                          "oa_package/08/e0/PMC13900.tar.gz,\"Breast Cancer Res. 2001; 3(1):55-60\",PMC13900,"
                          "2019-11-05 11:56:12,2001-01-01,11250746,NO-CC CODE\n";
  const auto rows = parse_file_list(csv);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].file_path, "oa_package/08/e0/PMC13900.tar.gz");
  EXPECT_EQ(rows[0].citation, "Breast Cancer Res. 2001; 3(1):55-60");
  EXPECT_EQ(rows[0].accession_id, "PMC13900");
  EXPECT_EQ(rows[0].date, "2001-01-01");
  EXPECT_EQ(rows[0].pmid, 11250746u);
  EXPECT_EQ(rows[0].license, "NO-CC CODE");
}

TEST(FileList, EmptyPmidIsAbsentAndColumnOrderFree) {
  const auto rows = parse_file_list("PMID,License,File,Date,Accession_ID,Citation\n,CC BY,a.tar.gz,2020-01-01,PMC1,c\n"
                                    "PMID:77,CC0,b.tar.gz,2020-01-02,PMC2,c\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].pmid.has_value());
  EXPECT_EQ(rows[1].pmid, 77u);
  EXPECT_EQ(rows[1].file_path, "b.tar.gz");
}

TEST(FileList, DuplicateFileNamesTheDuplicate) {
  const std::string csv = std::string(kHeader) + "x/a.tar.gz,c,PMC1,t,2020-01-01,1,CC BY\n" +
                          "x/a.tar.gz,c,PMC2,t,2020-01-01,2,CC BY\n";
  try {
    parse_file_list(csv);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("x/a.tar.gz"), std::string::npos);
  }
}

TEST(FileList, MissingColumnAndMalformedRows) {
  try {
    parse_file_list("File,Citation,Accession_ID,Date,PMID\n");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("License"), std::string::npos);
  }
  try {
    parse_file_list(std::string(kHeader) + "a,b,c\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), 2);
  }
  EXPECT_THROW(parse_file_list(std::string(kHeader) + "a,c,PMC1,t,d,notanumber,l\n"), ParseError);
}

FileListEntry entry(const std::string& acc) {
  FileListEntry e;
  e.file_path = "oa/" + acc + ".tar.gz";
  e.accession_id = acc;
  return e;
}

TEST(Fetch, FirstTrySuccess) {
  TempDir dir;
  MockTransport t;
  t.put("oa/PMC1.tar.gz", "payload");
  DownloadPolicy p;
  util::ManualClock clock;
  RateLimiter lim(p.max_requests_per_second, clock);
  const auto out = fetch_package(entry("PMC1"), p, t, lim, dir.path(), clock);
  EXPECT_EQ(t.request_count(), 1u);
  EXPECT_EQ(out.attempts, 1);
  EXPECT_EQ(util::read_file(out.archive), "payload");
}

TEST(Fetch, RetriesTransientFailures) {
  TempDir dir;
  MockTransport t;
  t.put("oa/PMC1.tar.gz", "payload");
  t.fail_first("oa/PMC1.tar.gz", 2);
  DownloadPolicy p;
  p.max_retries = 3;
  util::ManualClock clock;
  const auto start = clock.now();
  RateLimiter lim(p.max_requests_per_second, clock);
  const auto out = fetch_package(entry("PMC1"), p, t, lim, dir.path(), clock);
  EXPECT_EQ(t.request_count(), 3u);
  EXPECT_EQ(out.attempts, 3);
  // Back-off of 500 ms then 1000 ms.
  EXPECT_GE(clock.now() - start, std::chrono::milliseconds(1500));
}

TEST(Fetch, ExhaustedRetriesCarryAttemptCount) {
  TempDir dir;
  MockTransport t;
  t.put("oa/PMC1.tar.gz", "payload");
  t.fail_first("oa/PMC1.tar.gz", 10);
  DownloadPolicy p;
  p.max_retries = 2;
  util::ManualClock clock;
  RateLimiter lim(p.max_requests_per_second, clock);
  try {
    fetch_package(entry("PMC1"), p, t, lim, dir.path(), clock);
    FAIL();
  } catch (const FetchError& e) {
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_FALSE(fs::exists(dir / "PMC1.tar.gz"));
}

TEST(Fetch, PermanentFailureIsNotRetried) {
  TempDir dir;
  MockTransport t;
  DownloadPolicy p;
  util::ManualClock clock;
  RateLimiter lim(3, clock);
  EXPECT_THROW(fetch_package(entry("PMC9"), p, t, lim, dir.path(), clock), FetchError);
  EXPECT_EQ(t.request_count(), 1u);
}

TEST(Fetch, SizeMismatchIsIntegrityError) {
  TempDir dir;
  MockTransport t;
  t.put("oa/PMC1.tar.gz", "payload");
  t.advertise_size("oa/PMC1.tar.gz", 999);
  DownloadPolicy p;
  p.max_retries = 1;
  util::ManualClock clock;
  RateLimiter lim(3, clock);
  EXPECT_THROW(fetch_package(entry("PMC1"), p, t, lim, dir.path(), clock), IntegrityError);
}

TEST(Fetch, RerunIsIdempotentWithZeroRequests) {
  TempDir dir;
  MockTransport t;
  t.put("oa/PMC1.tar.gz", "payload");
  DownloadPolicy p;
  util::ManualClock clock;
  RateLimiter lim(3, clock);
  fetch_package(entry("PMC1"), p, t, lim, dir.path(), clock);
  const auto again = fetch_package(entry("PMC1"), p, t, lim, dir.path(), clock);
  EXPECT_TRUE(again.skipped);
  EXPECT_EQ(t.request_count(), 1u);
}

TEST(RateLimiter, VirtualTimeSlotsRespectWindow) {
  for (double rate : {1.0, 2.5, 3.0, 10.0}) {
    util::ManualClock clock;
    RateLimiter lim(rate, clock);
    std::vector<util::Clock::time_point> slots;
    for (int i = 0; i < 60; ++i) slots.push_back(lim.acquire());
    EXPECT_LE(testing::max_in_window(slots, std::chrono::seconds(1)), lim.capacity()) << rate;
    const double elapsed = std::chrono::duration<double>(slots.back() - slots.front()).count();
    // The first `capacity` slots form an initial burst.
    EXPECT_NEAR(static_cast<double>(60 - lim.capacity()) / elapsed, rate, rate * 0.05) << rate;
  }
}

TEST(Fetch, ConcurrentFetchesStayUnderRate) {
  TempDir dir;
  MockTransport t;
  for (int i = 0; i < 10; ++i) t.put("oa/PMC" + std::to_string(i) + ".tar.gz", "x");
  DownloadPolicy p;
  RateLimiter lim(p.max_requests_per_second);
  std::vector<std::thread> threads;
  for (int i = 0; i < 10; ++i) {
    threads.emplace_back([&, i] { fetch_package(entry("PMC" + std::to_string(i)), p, t, lim, dir.path()); });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(t.request_count(), 10u);
  EXPECT_LE(testing::max_in_window(t.timestamps(), std::chrono::seconds(1)), 3u);
}

fs::path write_archive(const TempDir& dir, const std::vector<std::pair<std::string, std::string>>& members) {
  const auto path = dir / "pkg.tar.gz";
  util::write_file_atomic(path, testing::make_tar_gz(members));
  return path;
}

TEST(Extract, KeepsOnlyConfiguredExtensions) {
  TempDir dir;
  const auto archive = write_archive(dir, {{"PMC1/a.nxml", "<a/>"}, {"PMC1/b.jpg", "j"}, {"PMC1/c.pdf", "p"}});
  DownloadPolicy p;
  const auto kept = extract_package(archive, p, dir / "out", "PMC1");
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0], dir / "out" / "PMC1" / "a.nxml");
  EXPECT_EQ(kept[1], dir / "out" / "PMC1" / "b.jpg");
  // Oracle: independent listing of the archive.
  std::set<std::string> expected;
  auto reader = util::make_memory_tar_reader(util::gunzip(util::read_file(archive)));
  while (auto e = reader.next()) {
    const auto ext = util::lower_extension(e->name);
    if (ext == "nxml" || ext == "jpg") expected.insert(fs::path(e->name).filename().string());
  }
  std::set<std::string> got;
  for (const auto& k : kept) got.insert(k.filename().string());
  EXPECT_EQ(got, expected);
}

TEST(Extract, CaseInsensitiveExtensionsAndNestedDirs) {
  TempDir dir;
  const auto archive = write_archive(dir, {{"PMC1/sub/FIG.JPG", "j"}, {"PMC1/v.mp4", "m"}});
  const auto kept = extract_package(archive, DownloadPolicy{}, dir / "out", "PMC1");
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], dir / "out" / "PMC1" / "sub" / "FIG.JPG");
}

TEST(Extract, OnlyDiscardedMembersYieldsEmpty) {
  TempDir dir;
  const auto archive = write_archive(dir, {{"PMC1/c.mp4", "m"}});
  EXPECT_TRUE(extract_package(archive, DownloadPolicy{}, dir / "out", "PMC1").empty());
}

TEST(Extract, TraversalIsRejectedBeforeWriting) {
  TempDir dir;
  const auto archive = write_archive(dir, {{"PMC1/ok.jpg", "j"}, {"../evil.jpg", "e"}});
  EXPECT_THROW(extract_package(archive, DownloadPolicy{}, dir / "out", "PMC1"), SecurityError);
  EXPECT_FALSE(fs::exists(dir / "out" / "PMC1" / "ok.jpg"));
  EXPECT_FALSE(fs::exists(dir / "evil.jpg"));
  const auto abs = write_archive(dir, {{"/etc/passwd.jpg", "e"}});
  EXPECT_THROW(extract_package(abs, DownloadPolicy{}, dir / "out", "PMC1"), SecurityError);
}

TEST(Extract, CorruptArchive) {
  TempDir dir;
  util::write_file_atomic(dir / "bad.tar.gz", "definitely not gzip");
  EXPECT_THROW(extract_package(dir / "bad.tar.gz", DownloadPolicy{}, dir / "out", "PMC1"), ExtractionError);
}

}  // namespace
}  // namespace pmcoa::ingest
