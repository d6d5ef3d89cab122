// Copyright 2026 The dceeval Authors
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

#include "dceeval/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "dceeval/error.hpp"
#include "dceeval/image_io.hpp"

namespace dceeval::cli {

namespace {

constexpr std::array<std::pair<Command, std::string_view>, 8> kCommands = {{
    {Command::kEvaluatePairs, "evaluate-pairs"},
    {Command::kFrechet, "frechet"},
    {Command::kSameSelect, "same-select"},
    {Command::kSubtract, "subtract"},
    {Command::kStack, "stack"},
    {Command::kKinetics, "kinetics"},
    {Command::kPhantom, "phantom"},
    {Command::kExtractFeatures, "extract-features"},
}};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      EVP_MD_CTX_free(ctx_);
      throw Error("cannot initialise SHA-256");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t size) {
    EVP_DigestUpdate(ctx_, data, size);
  }
  void update(std::string_view s) { update(s.data(), s.size()); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

// Directory digest: SHA-256 over "relative-path NUL file-digest LF" for every
// regular file, in path order.
std::string path_digest(const fs::path& path) {
  if (!fs::is_directory(path)) return file_digest(path);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& f : files) {
    h.update(fs::relative(f, path).generic_string());
    h.update("\0", 1);
    h.update(file_digest(f));
    h.update("\n");
  }
  return h.hex();
}

void require_dir(const fs::path& p, const char* flag) {
  if (p.empty()) throw Error(std::string(flag) + " is required");
  if (!fs::is_directory(p)) {
    throw Error(std::string(flag) + " " + p.string() + " is not a directory");
  }
}

void require_file(const fs::path& p, const char* flag) {
  if (p.empty()) throw Error(std::string(flag) + " is required");
  if (!fs::is_regular_file(p)) {
    throw Error(std::string(flag) + " " + p.string() + " does not exist");
  }
}

std::vector<std::pair<std::string, fs::path>> referenced_inputs(
    const RunConfig& c) {
  std::vector<std::pair<std::string, fs::path>> out;
  auto add = [&](const char* role, const fs::path& p) {
    if (!p.empty()) out.emplace_back(role, p);
  };
  add("inputs_a", c.inputs_a);
  add("inputs_b", c.inputs_b);
  add("bboxes", c.bboxes);
  add("features_a", c.features_a);
  add("features_b", c.features_b);
  add("directions", c.directions);
  add("spec", c.spec);
  return out;
}

void write_manifest(const RunConfig& c, const std::vector<std::string>& outputs) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [role, path] : referenced_inputs(c)) {
    inputs.push_back(
        {{"role", role}, {"path", path.string()}, {"sha256", path_digest(path)}});
  }
  nlohmann::json config = {
      {"command", std::string(command_name(c.command))},
      {"inputs_a", c.inputs_a.string()},
      {"inputs_b", c.inputs_b.string()},
      {"bboxes", c.bboxes.string()},
      {"features_a", c.features_a.string()},
      {"features_b", c.features_b.string()},
      {"directions", c.directions.string()},
      {"spec", c.spec.string()},
      {"extractor_id", c.extractor_id},
      {"out", c.out.string()},
      {"workers", c.workers},
      {"metrics", c.metrics_list},
  };
  nlohmann::json manifest = {
      {"toolkit", {{"name", kToolkitName}, {"version", kToolkitVersion}}},
      {"config", config},
      {"inputs", inputs},
      {"outputs", outputs},
  };
  io::write_text(c.out / kManifestJson, manifest.dump(2) + "\n");
}

}  // namespace

std::string_view command_name(Command c) {
  for (const auto& [cmd, name] : kCommands) {
    if (cmd == c) return name;
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
  for (const auto& [cmd, n] : kCommands) {
    if (n == name) return cmd;
  }
  return std::nullopt;
}

int default_workers() {
  const char* env = std::getenv(kWorkersEnv);
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) {
    throw Error(std::string(kWorkersEnv) + " must be a positive integer, got '" +
                env + "'");
  }
  return static_cast<int>(v);
}

void RunConfig::validate() const {
  if (workers < 1) throw Error("--workers must be at least 1");
  if (out.empty()) throw Error("--out is required");
  switch (command) {
    case Command::kEvaluatePairs:
    case Command::kSubtract:
      require_dir(inputs_a, "--inputs-a");
      require_dir(inputs_b, "--inputs-b");
      break;
    case Command::kFrechet:
      if (!features_a.empty()) {
        require_file(features_a, "--features-a");
      } else {
        require_dir(inputs_a, "--features-a or --inputs-a");
      }
      if (!features_b.empty()) {
        require_file(features_b, "--features-b");
      } else {
        require_dir(inputs_b, "--features-b or --inputs-b");
      }
      break;
    case Command::kSameSelect:
      require_file(inputs_a, "--inputs-a");
      if (!directions.empty()) require_file(directions, "--directions");
      break;
    case Command::kStack:
    case Command::kExtractFeatures:
      require_dir(inputs_a, "--inputs-a");
      break;
    case Command::kKinetics:
      require_dir(inputs_a, "--inputs-a");
      if (!inputs_b.empty()) require_dir(inputs_b, "--inputs-b");
      require_file(bboxes, "--bboxes");
      break;
    case Command::kPhantom:
      require_file(spec, "--spec");
      break;
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    throw Error("cannot create output directory " + out.string());
  }
}

std::optional<RunConfig> parse_command_line(int argc, const char* const* argv) {
  CLI::App app{"Evaluation toolkit for paired synthetic DCE-MRI slices", kToolkitName};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  RunConfig config;
  std::string inputs_a, inputs_b, bboxes, features_a, features_b, directions,
      spec, out;
  std::optional<int> workers;

  const std::map<Command, std::string> help = {
      {Command::kEvaluatePairs, "Pair metrics over matched slices of two roots"},
      {Command::kFrechet, "Frechet distance between two feature sets"},
      {Command::kSameSelect, "SAMe scaling and checkpoint selection"},
      {Command::kSubtract, "Subtraction images (post - pre, clipped at 0)"},
      {Command::kStack, "Stack slices into validated volume directories"},
      {Command::kKinetics, "Lesion bounding-box kinetics per case and phase"},
      {Command::kPhantom, "Generate lesion phantoms from a JSON spec"},
      {Command::kExtractFeatures, "Baseline 8x8 average-pool features"},
  };

  std::map<CLI::App*, Command> subcommands;
  for (const auto& [cmd, name] : kCommands) {
    CLI::App* sub = app.add_subcommand(std::string(name), help.at(cmd));
    subcommands[sub] = cmd;
    sub->add_option("--inputs-a", inputs_a, "First input root (or file)");
    sub->add_option("--inputs-b", inputs_b, "Second input root");
    sub->add_option("--bboxes", bboxes, "Bounding-box CSV");
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--workers", workers, "Worker threads (default $DCEEVAL_WORKERS or 1)");
    sub->add_option("--metrics", config.metrics_list,
                    "Comma list of mse,mae,psnr,ssim,msssim");
    sub->add_option("--features-a", features_a, "FeatureSet file (.fset or .csv)");
    sub->add_option("--features-b", features_b, "FeatureSet file (.fset or .csv)");
    sub->add_option("--extractor-id", config.extractor_id,
                    "Extractor id for CSV feature input");
    sub->add_option("--directions", directions, "SAMe directions JSON sidecar");
    sub->add_option("--spec", spec, "Phantom spec JSON");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::CallForVersion&) {
    std::cout << kToolkitVersion << "\n";
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw Error(std::string("usage: ") + e.what());
  }

  for (const auto& [sub, cmd] : subcommands) {
    if (sub->parsed()) config.command = cmd;
  }
  config.inputs_a = inputs_a;
  config.inputs_b = inputs_b;
  config.bboxes = bboxes;
  config.features_a = features_a;
  config.features_b = features_b;
  config.directions = directions;
  config.spec = spec;
  config.out = out;
  config.workers = workers ? *workers : default_workers();
  config.metrics = metrics::MetricSelection::parse(config.metrics_list);
  return config;
}

void execute(const RunConfig& config) {
  config.validate();
  std::error_code ec;
  fs::remove(config.out / kErrorJson, ec);
  std::vector<std::string> outputs;
  switch (config.command) {
    case Command::kEvaluatePairs:
      outputs = detail::evaluate_pairs(config);
      break;
    case Command::kFrechet:
      outputs = detail::frechet(config);
      break;
    case Command::kSameSelect:
      outputs = detail::same_select(config);
      break;
    case Command::kSubtract:
      outputs = detail::subtract(config);
      break;
    case Command::kStack:
      outputs = detail::stack(config);
      break;
    case Command::kKinetics:
      outputs = detail::kinetics(config);
      break;
    case Command::kPhantom:
      outputs = detail::phantom(config);
      break;
    case Command::kExtractFeatures:
      outputs = detail::extract_features(config);
      break;
  }
  outputs.push_back(kManifestJson);
  write_manifest(config, outputs);
}

namespace {

int report_failure(std::string_view command, const std::string& message,
                   int status, const fs::path& out) {
  nlohmann::json j = {{"status", "error"},
                      {"command", std::string(command)},
                      {"message", message},
                      {"exit_code", status}};
  std::cerr << j.dump(2) << "\n";
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (fs::is_directory(out, ec)) {
      std::ofstream f(out / kErrorJson, std::ios::trunc);
      f << j.dump(2) << "\n";
    }
  }
  return status;
}

}  // namespace

int run(const RunConfig& config) {
  try {
    config.validate();
  } catch (const std::exception& e) {
    return report_failure(command_name(config.command), e.what(), 2, config.out);
  }
  try {
    execute(config);
    return 0;
  } catch (const std::exception& e) {
    return report_failure(command_name(config.command), e.what(), 1, config.out);
  }
}

int main(int argc, const char* const* argv) {
  std::optional<RunConfig> config;
  try {
    config = parse_command_line(argc, argv);
  } catch (const std::exception& e) {
    return report_failure("", e.what(), 2, {});
  }
  if (!config) return 0;
  return run(*config);
}

}  // namespace dceeval::cli
