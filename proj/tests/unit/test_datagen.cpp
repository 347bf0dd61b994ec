#include <gtest/gtest.h>
#include <yaml-cpp/yaml.h>

#include "agrosim/policies.hpp"
#include "support.hpp"

using namespace agrosim;
using agrosim::testing::agro;
using agrosim::testing::slurp;
using agrosim::testing::TempDir;
namespace fs = std::filesystem;

namespace {

DatasetRequest request(int n, LogFormat format = LogFormat::Csv) {
  DatasetRequest req;
  req.config = agro("wheat");
  req.n_episodes = n;
  req.seed = 77;
  req.format = format;
  req.policy_params = {{"seed", 2}};
  return req;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Datagen, ZeroEpisodesWritesOnlyMetadata) {
  TempDir dir("dg0");
  const auto m = generate_dataset(request(0), dir.path());
  EXPECT_TRUE(m.episodes.empty());
  std::set<std::string> files;
  for (const auto& e : fs::directory_iterator(dir.path())) files.insert(e.path().filename().string());
  EXPECT_EQ(files, (std::set<std::string>{"manifest.yaml", "run_config.yaml"}));
  EXPECT_EQ(YAML::LoadFile((dir.path() / "manifest.yaml").string())["n_episodes"].as<int>(), 0);
}

TEST(Datagen, RerunsAreByteIdentical) {
  TempDir a("dga"), b("dgb");
  generate_dataset(request(3), a.path(), true);
  generate_dataset(request(3), b.path(), false);
  for (const auto& e : fs::directory_iterator(a.path())) {
    const auto name = e.path().filename();
    EXPECT_EQ(slurp(e.path()), slurp(b.path() / name)) << name;
  }
}

TEST(Datagen, ManifestHashesMatchFiles) {
  TempDir dir("dgm");
  const auto m = generate_dataset(request(2), dir.path());
  const YAML::Node y = YAML::LoadFile((dir.path() / "manifest.yaml").string());
  EXPECT_EQ(y["seed"].as<std::uint64_t>(), 77u);
  EXPECT_EQ(y["policy"].as<std::string>(), "random");
  EXPECT_EQ(y["config"]["sha256"].as<std::string>(), sha256_file(dir.path() / "run_config.yaml"));
  ASSERT_EQ(y["episodes"].size(), 2u);
  std::set<std::uint64_t> seeds;
  for (const auto& e : y["episodes"]) {
    const fs::path file = dir.path() / e["file"].as<std::string>();
    EXPECT_EQ(e["sha256"].as<std::string>(), sha256_file(file));
    EXPECT_EQ(e["records"].as<std::size_t>(), lines(slurp(file)).size() - 1);
    seeds.insert(e["seed"].as<std::uint64_t>());
  }
  EXPECT_EQ(seeds.size(), 2u);
  const auto cfg = load_agro_config(dir.path() / "run_config.yaml");
  EXPECT_EQ(run_config_yaml(cfg), slurp(dir.path() / "run_config.yaml"));
}

TEST(Datagen, CsvAndJsonlCarryTheSameRecords) {
  const auto csv = render_episodes_serial(request(2, LogFormat::Csv));
  const auto jsonl = render_episodes_serial(request(2, LogFormat::Jsonl));
  ASSERT_EQ(csv.size(), 2u);
  for (std::size_t e = 0; e < csv.size(); ++e) {
    const auto rows = lines(csv[e]);
    const auto objs = lines(jsonl[e]);
    ASSERT_EQ(rows.size(), objs.size() + 1);
    const auto header = split(rows[0], ',');
    EXPECT_EQ(header, log_columns());
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const auto cells = split(rows[i + 1], ',');
      const auto j = nlohmann::json::parse(objs[i]);
      ASSERT_EQ(cells.size(), header.size());
      ASSERT_EQ(j.size(), header.size());
      for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& v = j.at(header[c]);
        if (v.is_string()) {
          EXPECT_EQ(cells[c], v.get<std::string>());
        } else {
          EXPECT_EQ(std::stod(cells[c]), v.get<double>()) << header[c] << " row " << i;
        }
      }
    }
  }
}

TEST(Datagen, SerialMatchesParallel) {
  auto req = request(5);
  req.randomization.param_noise = 0.1;
  req.randomization.noise_params = default_noise_params();
  EXPECT_EQ(render_episodes_serial(req), render_episodes_parallel(req));
}

TEST(Datagen, WeatherVariesAcrossEpisodes) {
  auto req = request(2);
  req.policy = "no_op";
  req.policy_params = nlohmann::json::object();
  const auto varied = render_episodes_serial(req);
  EXPECT_NE(varied[0], varied[1]);
  req.vary_weather = false;
  const auto fixed = render_episodes_serial(req);
  EXPECT_EQ(fixed[0], fixed[1]);
}

TEST(Datagen, RejectsBadRequests) {
  TempDir dir("dgbad");
  EXPECT_THROW(render_episodes_serial(request(-1)), ValidationError);
  auto req = request(1);
  req.policy = "nope";
  EXPECT_THROW(generate_dataset(req, dir.path()), ValidationError);
  EXPECT_THROW(parse_log_format("npz"), ValidationError);
}
