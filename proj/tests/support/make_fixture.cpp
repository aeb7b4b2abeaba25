// Writes the three-article fixture as a directory mirror plus a pipeline
// config under <root>, for exercising the command-line tool.
#include <iostream>

#include "pipeline_fixture.hpp"
#include "pmcoa/util/fs.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: pmcoa_make_fixture <root>\n";
    return 2;
  }
  namespace fs = std::filesystem;
  const fs::path root = fs::absolute(argv[1]);
  fs::remove_all(root);
  const auto f = pmcoa::testing::three_article_fixture();
  for (const auto& [remote, bytes] : f.packages) pmcoa::util::write_file_atomic(root / "mirror" / remote, bytes);
  pmcoa::testing::write_fixture_inputs(f, root);
  auto config = pmcoa::testing::fixture_config(root);
  config["ingest"]["mirror"] = (root / "mirror").string();
  config["enrich"] = {{"enabled", false}};
  pmcoa::util::write_file_atomic(root / "pipeline.json", config.dump(2) + "\n");
  auto broken = config;
  broken["paths"].erase("shards_dir");
  pmcoa::util::write_file_atomic(root / "broken.json", broken.dump(2) + "\n");
  return 0;
}
