#include "agrosim/policies.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <array>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iterator>
#include <sstream>

#include "agrosim/text.hpp"

namespace agrosim {

LogFormat parse_log_format(const std::string& text) {
  if (text == "csv") return LogFormat::Csv;
  if (text == "jsonl") return LogFormat::Jsonl;
  throw ValidationError("unknown format '" + text + "' (expected csv or jsonl)");
}

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw RuntimeError("sha256 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot read " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(data);
}

namespace {

std::uint64_t episode_seed(const DatasetRequest& req, int i) {
  return mix_seed(req.seed, static_cast<std::uint64_t>(i));
}

std::string render_one(const DatasetRequest& req, const Policy& policy, int i) {
  const std::uint64_t seed = episode_seed(req, i);
  ResolvedConfig cfg = req.config;
  if (req.vary_weather && cfg.agro.weather_source == "synthetic") cfg.agro.random_seed = seed;
  EnvOptions opt;
  opt.actions = req.actions;
  opt.randomization = req.randomization;
  opt.seed = seed;
  Env env(cfg, opt);
  const EpisodeResult res = run_episode(env, policy, seed);
  std::ostringstream out;
  if (req.format == LogFormat::Csv) write_log_csv(res.farms.front(), out);
  else write_log_jsonl(res.farms.front(), out);
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeError("failed writing " + path.string());
}

std::string episode_file(int i, LogFormat f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "episode_%04d.%s", i, f == LogFormat::Csv ? "csv" : "jsonl");
  return buf;
}

int count_records(const std::string& text, LogFormat f) {
  int lines = 0;
  for (char c : text) lines += c == '\n';
  return f == LogFormat::Csv ? lines - 1 : lines;
}

}  // namespace

std::vector<std::string> render_episodes_serial(const DatasetRequest& req) {
  if (req.n_episodes < 0) throw ValidationError("n_episodes must be >= 0");
  const auto policy = builtin_policy(req.policy, req.policy_params, req.actions);
  std::vector<std::string> out;
  for (int i = 0; i < req.n_episodes; ++i) out.push_back(render_one(req, *policy, i));
  return out;
}

std::vector<std::string> render_episodes_parallel(const DatasetRequest& req) {
  if (req.n_episodes < 0) throw ValidationError("n_episodes must be >= 0");
  const auto policy = builtin_policy(req.policy, req.policy_params, req.actions);
  std::vector<std::string> out(static_cast<std::size_t>(req.n_episodes));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < req.n_episodes; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = render_one(req, *policy, i);
    } catch (...) {
#pragma omp critical(agrosim_datagen_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::string manifest_yaml(const Manifest& m) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << m.seed;
  out << YAML::Key << "policy" << YAML::Value << m.policy;
  out << YAML::Key << "policy_params" << YAML::Value << m.policy_params;
  out << YAML::Key << "format" << YAML::Value << m.format;
  out << YAML::Key << "config" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "file" << YAML::Value << m.config_file;
  out << YAML::Key << "sha256" << YAML::Value << m.config_sha256;
  out << YAML::EndMap;
  out << YAML::Key << "n_episodes" << YAML::Value << m.episodes.size();
  out << YAML::Key << "episodes" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : m.episodes) {
    out << YAML::BeginMap;
    out << YAML::Key << "episode" << YAML::Value << e.episode;
    out << YAML::Key << "seed" << YAML::Value << e.seed;
    out << YAML::Key << "file" << YAML::Value << e.file;
    out << YAML::Key << "sha256" << YAML::Value << e.sha256;
    out << YAML::Key << "records" << YAML::Value << e.n_records;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

Manifest generate_dataset(const DatasetRequest& req, const std::filesystem::path& out_dir,
                          bool parallel) {
  const auto policy = builtin_policy(req.policy, req.policy_params, req.actions);
  validate(req.randomization);
  const auto texts = parallel ? render_episodes_parallel(req) : render_episodes_serial(req);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw RuntimeError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest m;
  m.seed = req.seed;
  m.policy = req.policy;
  m.policy_params = policy->params().dump();
  m.format = req.format == LogFormat::Csv ? "csv" : "jsonl";
  const std::string cfg_text = run_config_yaml(req.config);
  write_text(out_dir / "run_config.yaml", cfg_text);
  m.config_file = "run_config.yaml";
  m.config_sha256 = sha256_hex(cfg_text);
  for (int i = 0; i < req.n_episodes; ++i) {
    const std::string& text = texts[static_cast<std::size_t>(i)];
    ManifestEntry e;
    e.episode = i;
    e.seed = episode_seed(req, i);
    e.file = episode_file(i, req.format);
    write_text(out_dir / e.file, text);
    e.sha256 = sha256_hex(text);
    e.n_records = count_records(text, req.format);
    m.episodes.push_back(std::move(e));
  }
  write_text(out_dir / "manifest.yaml", manifest_yaml(m));
  return m;
}

}  // namespace agrosim
