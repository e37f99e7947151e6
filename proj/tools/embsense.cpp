/*
 * Copyright 2026 The embsense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// embsense synth|effects|embed|analyze|evaluate|full --config <path>
//          [--out <dir>] [--workers N] [--seed S]

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "embsense/error.hpp"
#include "embsense/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using embsense::pipeline::Pipeline;
using embsense::pipeline::PipelineConfig;
using embsense::pipeline::Stage;

void SetUpLogging(const fs::path& out_dir) {
  const char* env = std::getenv("EMBSENSE_LOG");
  const auto level = env ? spdlog::level::from_str(env) : spdlog::level::info;
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  console->set_level(level);
  std::vector<spdlog::sink_ptr> sinks{console};
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  try {
    auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(
        (out_dir / "run.log").string(), true);
    file->set_level(spdlog::level::trace);
    sinks.push_back(file);
  } catch (const spdlog::spdlog_ex&) {
    // Unwritable output dirs surface as a stage error later.
  }
  auto logger =
      std::make_shared<spdlog::logger>("embsense", sinks.begin(), sinks.end());
  logger->set_level(std::min(level, spdlog::level::info));
  spdlog::set_default_logger(logger);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio embedding sensitivity to effects"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "generate or ingest the dataset"},
      {"effects", "render effected audio for every sweep"},
      {"embed", "embed clean and effected audio"},
      {"analyze", "run sensitivity and dimensionality analysis"},
      {"evaluate", "run the downstream classification grid"},
      {"full", "run every stage"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out, "output directory (overrides config)");
    sub->add_option("--workers", workers, "worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed (overrides config)");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    PipelineConfig config = config_path.empty()
                                ? PipelineConfig::Default()
                                : PipelineConfig::Load(config_path);
    if (out) config.output_dir = *out;
    if (workers) config.workers = *workers;
    if (seed) config.seed = *seed;
    config.Validate();
    SetUpLogging(config.output_dir);
    spdlog::info("run_id {} output {}", config.RunId(),
                 config.output_dir.string());

    Pipeline pipeline(config);
    std::vector<embsense::pipeline::StageResult> results;
    if (command == "full") {
      results = pipeline.RunAll();
    } else {
      Stage target = Stage::kSynth;
      if (command == "effects") target = Stage::kEffects;
      if (command == "embed") target = Stage::kEmbed;
      if (command == "analyze") target = Stage::kAnalyze;
      if (command == "evaluate") target = Stage::kEvaluate;
      results = pipeline.RunThrough(target);
    }
    std::size_t failed = 0;
    for (const auto& r : results) {
      std::cout << fmt::format("{}: {} ({} failed cells)\n",
                               embsense::pipeline::StageName(r.stage),
                               embsense::pipeline::StageStatusName(r.status),
                               r.failed_cells);
      failed += r.failed_cells;
    }
    return failed == 0 ? 0 : 1;
  } catch (const embsense::Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
}
