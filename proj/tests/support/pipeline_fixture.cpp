#include "pipeline_fixture.hpp"

#include "pmcoa/label/annotation_log.hpp"
#include "pmcoa/util/fs.hpp"

namespace pmcoa::testing {

namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<std::string, std::string>> kClusterLabels = {
    {"Microscopy", "light microscopy"}, {"Plots and Charts", "barplot"}, {"Tables", "table"}};

}  // namespace

PipelineFixture three_article_fixture() {
  PipelineFixture f;
  FixtureArticle a;
  a.accession_id = "PMC500001";
  a.pmid = 31000001;
  a.title = "Imaging of cells under stress";
  a.abstract = "We image cells.";
  a.keywords = {"cells", "imaging"};
  a.category = "Research Article";
  a.license = "CC BY";
  a.figures = {{"F1", "fig1", "Fluorescence image of stressed cells.", {"Cells were imaged as shown"}},
               {"F2", "fig2.jpg", "Bar plot of survival rates.", {"Survival dropped", "Compare with controls"}},
               {"F3", "fig3", "Summary table of conditions.", {}}};
  a.extra_paragraphs = {"Background paragraph without figures."};
  f.articles.push_back(a);

  FixtureArticle b;
  b.accession_id = "PMC500002";
  b.pmid = 31000002;
  b.title = "Chest radiographs in a cohort";
  b.abstract = "A cohort study.";
  b.keywords = {"radiography"};
  b.license = "CC BY-NC";
  b.date = "2021-06-15";
  b.figures = {{"G1", "g1", "Chest X-ray of patient 3.", {"Radiograph in"}},
               {"G2", "g2", "Kaplan-Meier style bar chart.", {}}};
  f.articles.push_back(b);

  FixtureArticle c;
  c.accession_id = "PMC500003";
  c.pmid = 31000003;
  c.title = "Field sites and sampling";
  c.abstract = "Sampling sites are mapped.";
  c.category = "Brief Report";
  c.license = "NO-CC CODE";
  c.date = "2019-03-02";
  c.figures = {{"H1", "h1", "Map of sampling sites.", {"Sites are shown"}}, {"H2", "h2", "", {}}};
  f.articles.push_back(c);

  f.file_list_csv = "File,Citation,Accession_ID,Last Updated (YYYY-MM-DD HH:MM:SS),Date,PMID,License\n";
  std::uint64_t seed = 100;
  for (const auto& art : f.articles) {
    std::vector<std::pair<std::string, std::string>> members;
    members.emplace_back(art.accession_id + "/" + art.accession_id + ".nxml", render_nxml(art));
    int w = 64;
    for (const auto& fig : art.figures) {
      const std::string file = fig.href.ends_with(".jpg") ? fig.href : fig.href + ".jpg";
      const auto bytes = fake_jpeg(w, w / 2 + 7, ++seed, 512);
      f.image_sizes[art.accession_id + "/" + file] = {w, w / 2 + 7};
      w += 16;
      f.images[art.accession_id + "/" + file] = bytes;
      members.emplace_back(art.accession_id + "/" + file, bytes);
    }
    members.emplace_back(art.accession_id + "/supplement.pdf", "not kept");
    const std::string remote = "oa_package/" + art.accession_id.substr(3, 2) + "/" + art.accession_id + ".tar.gz";
    f.packages[remote] = make_tar_gz(members);
    f.citations[art.accession_id] = art.journal + ". " + art.date.substr(0, 4);
    f.file_list_csv += remote + ",\"" + f.citations[art.accession_id] + "\"," + art.accession_id +
                       ",2024-01-01 00:00:00," + art.date + "," + std::to_string(art.pmid) + "," + art.license + "\n";
  }

  f.metadata[31000001] = {31000001, {"Cells", "Oxidative Stress"}, {32000001, 32000002}, 2};
  f.metadata[31000002] = {31000002, {"Radiography, Thoracic"}, {}, 0};
  f.metadata[31000003] = {31000003, {}, {32000009}, 1};
  return f;
}

std::size_t PipelineFixture::figure_count() const {
  std::size_t n = 0;
  for (const auto& a : articles) n += a.figures.size();
  return n;
}

void PipelineFixture::install(MockTransport& transport) const {
  for (const auto& [path, bytes] : packages) transport.put(path, bytes);
}

std::vector<label::ClusterAnnotation> PipelineFixture::annotations(int k) const {
  std::vector<label::ClusterAnnotation> out;
  for (int id = 0; id < k; ++id) {
    const auto [global, local] = cluster_labels(id);
    for (const char* who : {"ann-a", "ann-b"}) {
      out.push_back({who, id, label::PanelType::Single, {global}, {local}, "2024-01-01T00:00:00Z"});
    }
  }
  return out;
}

std::pair<std::string, std::string> PipelineFixture::cluster_labels(std::int64_t cluster_id) {
  return kClusterLabels[static_cast<std::size_t>(cluster_id) % kClusterLabels.size()];
}

nlohmann::json fixture_config(const fs::path& root) {
  return {{"work_dir", root.string()},
          {"paths",
           {{"file_list", "inputs/file_list.csv"},
            {"ingest_dir", "ingest"},
            {"extract_dir", "extract"},
            {"enrich_dir", "enrich"},
            {"articles_dir", "articles"},
            {"stats", "articles/stats.json"},
            {"embeddings", "embed/images"},
            {"cluster_dir", "cluster"},
            {"export_dir", "export"},
            {"annotations", "inputs/annotations.jsonl"},
            {"labels_dir", "labels"},
            {"shards_dir", "shards"},
            {"eval_dir", "eval"}}},
          {"ingest", {{"rate", 50.0}, {"retries", 2}, {"retry_base_ms", 1}, {"workers", 2}}},
          {"enrich", {{"batch_size", 2}, {"retries", 1}, {"retry_base_ms", 1}, {"rate", 50.0}}},
          {"embed", {{"backend", "hash"}, {"dim", 32}}},
          {"cluster", {{"k", 3}, {"variance_target", 0.99}, {"seed", 7}}},
          {"annotate", {{"sample_size", 30}, {"seed", 11}}},
          {"serialize", {{"shard_size", 3}, {"workers", 2}}}};
}

void write_fixture_inputs(const PipelineFixture& f, const fs::path& root, int k) {
  fs::create_directories(root / "inputs");
  util::write_file_atomic(root / "inputs" / "file_list.csv", f.file_list_csv);
  fs::remove(root / "inputs" / "annotations.jsonl");
  label::AnnotationLog log(root / "inputs" / "annotations.jsonl");
  for (const auto& a : f.annotations(k)) log.append(a);
}

}  // namespace pmcoa::testing
