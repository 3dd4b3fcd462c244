// Copyright 2026 The ehm Authors
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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ehm/analytics.hpp"
#include "ehm/attention.hpp"
#include "ehm/hierarchy.hpp"
#include "ehm/maskgen.hpp"
#include "ehm/rng.hpp"
#include "ehm/simharness.hpp"

namespace {

constexpr const char* kVersion = "ehm 1.0.0";

ehm::Linkage parse_linkage(const std::string& name) {
  if (name == "children-average") return ehm::Linkage::children_average;
  if (name == "leaf-average") return ehm::Linkage::leaf_average;
  throw ehm::Error(ehm::Errc::invalid_value, "unknown linkage: " + name);
}

// "a:b" inclusive, or a single layer "a".
std::pair<uint32_t, uint32_t> parse_layer_range(const std::string& text) {
  const size_t colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const uint32_t layer = static_cast<uint32_t>(std::stoul(text));
      return {layer, layer};
    }
    return {static_cast<uint32_t>(std::stoul(text.substr(0, colon))),
            static_cast<uint32_t>(std::stoul(text.substr(colon + 1)))};
  } catch (const std::exception&) {
    throw ehm::Error(ehm::Errc::invalid_value,
                     "bad layer range '" + text + "', expected a or a:b");
  }
}

std::pair<uint32_t, uint32_t> default_layer_range(uint32_t layers) {
  const uint32_t count = std::max<uint32_t>(1, layers / 2);
  return {0, count - 1};
}

struct GenAttnArgs {
  int height = 8, width = 8, patch = 16;
  int segments = 4;
  double epsilon = 0.0, jitter = 0.0;
  uint64_t seed = 0;
  uint32_t images = 1, layers = 1, heads = 1;
  std::string output;
};

int run_gen_attn(const GenAttnArgs& a) {
  std::cout << "# config: gen-attn height=" << a.height << " width=" << a.width
            << " patch-size=" << a.patch << " segments=" << a.segments
            << " epsilon=" << ehm::format_g6(a.epsilon)
            << " jitter=" << ehm::format_g6(a.jitter) << " seed=" << a.seed
            << " images=" << a.images << " layers=" << a.layers
            << " heads=" << a.heads << " output=" << a.output << "\n";
  const ehm::PatchGrid grid(a.height, a.width, a.patch);
  ehm::AttentionBatch batch;
  batch.images = a.images;
  batch.layers = a.layers;
  batch.heads = a.heads;
  batch.tokens = static_cast<uint32_t>(grid.tokens());
  for (uint32_t image = 0; image < a.images; ++image) {
    const uint64_t image_seed = ehm::SplitMix64::mix(a.seed, image);
    const ehm::Scene scene =
        ehm::make_scene(grid, a.segments, ehm::SplitMix64::mix(image_seed, 0));
    for (uint32_t layer = 0; layer < a.layers; ++layer) {
      for (uint32_t head = 0; head < a.heads; ++head) {
        const uint64_t jitter_seed = ehm::SplitMix64::mix(
            image_seed, 1 + static_cast<uint64_t>(layer) * a.heads + head);
        const ehm::Matd m =
            ehm::oracle_attention(scene, a.epsilon, a.jitter, jitter_seed);
        batch.maps.push_back(m.cast<float>());
      }
    }
  }
  ehm::save_attention(batch, std::filesystem::path(a.output));
  return 0;
}

struct BuildTreeArgs {
  std::string input;
  uint32_t image = 0;
  std::string layers = "auto";
  std::string linkage = "children-average";
  std::string output;
};

int run_build_tree(const BuildTreeArgs& a) {
  const ehm::AttentionBatch batch =
      ehm::load_attention(std::filesystem::path(a.input));
  const auto [lo, hi] = a.layers == "auto"
                            ? default_layer_range(batch.layers)
                            : parse_layer_range(a.layers);
  std::cout << "# config: build-tree input=" << a.input
            << " image=" << a.image << " layers=" << lo << ":" << hi
            << " linkage=" << a.linkage << " output=" << a.output << "\n";
  const ehm::Matd similarity = ehm::aggregate(batch, a.image, lo, hi);
  const ehm::HierarchyTree tree =
      ehm::build_tree(similarity, parse_linkage(a.linkage));
  ehm::write_tree(tree, std::filesystem::path(a.output));
  return 0;
}

struct MaskArgs {
  std::string tree;
  int epoch = 0;
  int epochs = 1;
  double ratio = 0.75;
  uint64_t seed = 0;
  int depth_fixed = 0;  // 0: use the tree's own height in the schedule
  int height = 0, width = 0;  // 0: square grid inferred from the leaf count
  std::string output;
};

ehm::PatchGrid grid_for_leaves(int leaves, int height, int width) {
  if (height > 0 && width > 0) {
    ehm::PatchGrid grid(height, width);
    if (grid.tokens() != leaves) {
      throw ehm::Error(ehm::Errc::leaf_count_mismatch,
                       "grid does not match the tree's leaf count");
    }
    return grid;
  }
  const int side = static_cast<int>(std::lround(std::sqrt(leaves)));
  if (side * side == leaves) return ehm::PatchGrid(side, side);
  return ehm::PatchGrid(1, leaves);
}

int run_mask(const MaskArgs& a) {
  std::cout << "# config: mask tree=" << a.tree << " epoch=" << a.epoch
            << " epochs=" << a.epochs << " ratio=" << ehm::format_g6(a.ratio)
            << " seed=" << a.seed << " depth-fixed=" << a.depth_fixed
            << " output=" << a.output << "\n";
  const ehm::HierarchyTree tree =
      ehm::read_tree(std::filesystem::path(a.tree));
  const int schedule_height =
      a.depth_fixed > 0 ? a.depth_fixed : tree.height();
  const int depth = std::min(
      ehm::mask_depth(a.epoch, a.epochs, schedule_height), tree.height());
  const ehm::PatchGrid grid =
      grid_for_leaves(tree.leaf_count, a.height, a.width);
  const ehm::Mask mask =
      ehm::generate_mask(tree, grid, depth, a.ratio, a.seed);
  ehm::write_mask(mask, std::filesystem::path(a.output));
  std::cout << "h=" << depth << "\n";
  return 0;
}

struct BaselineArgs {
  std::string kind;
  int height = 14, width = 14, patch = 16;
  double ratio = 0.75;
  uint64_t seed = 0;
  int min_block = 16;
  std::string output;
};

int run_baseline(const BaselineArgs& a) {
  std::cout << "# config: baseline kind=" << a.kind << " height=" << a.height
            << " width=" << a.width << " ratio=" << ehm::format_g6(a.ratio)
            << " seed=" << a.seed << " min-block=" << a.min_block
            << " output=" << a.output << "\n";
  const ehm::PatchGrid grid(a.height, a.width, a.patch);
  ehm::Mask mask = [&] {
    if (a.kind == "random") return ehm::random_mask(grid, a.ratio, a.seed);
    if (a.kind == "grid") return ehm::grid_mask(grid, a.ratio);
    if (a.kind == "block") {
      return ehm::block_mask(grid, a.ratio, a.seed, a.min_block);
    }
    throw ehm::Error(ehm::Errc::invalid_value,
                     "unknown baseline kind: " + a.kind);
  }();
  ehm::write_mask(mask, std::filesystem::path(a.output));
  return 0;
}

struct AnalyzeArgs {
  std::string input;   // EHMA (mad)
  std::string tree;    // tree file (partition)
  std::string mask;    // EHMK (stats, purity)
  uint32_t image = 0;
  std::string layers = "auto";
  int height = 0, width = 0, patch = 16;
  int depth = 1;
  int segments = 1;
  uint64_t scene_seed = 0;
};

int run_analyze_mad(const AnalyzeArgs& a) {
  const ehm::AttentionBatch batch =
      ehm::load_attention(std::filesystem::path(a.input));
  const auto [lo, hi] = a.layers == "auto"
                            ? default_layer_range(batch.layers)
                            : parse_layer_range(a.layers);
  std::cout << "# config: analyze mad input=" << a.input
            << " image=" << a.image << " layers=" << lo << ":" << hi
            << " height=" << a.height << " width=" << a.width
            << " patch-size=" << a.patch << "\n";
  const ehm::PatchGrid grid(a.height, a.width, a.patch);
  if (static_cast<uint32_t>(grid.tokens()) != batch.tokens) {
    throw ehm::Error(ehm::Errc::grid_mismatch,
                     "grid does not match the file's token count");
  }
  const ehm::Matd similarity = ehm::aggregate(batch, a.image, lo, hi);
  const double mad = ehm::mean_attention_distance(similarity, grid);
  std::printf("%.6f\n", mad);
  return 0;
}

int run_analyze_partition(const AnalyzeArgs& a) {
  std::cout << "# config: analyze partition tree=" << a.tree
            << " depth=" << a.depth << " height=" << a.height
            << " width=" << a.width << "\n";
  const ehm::HierarchyTree tree =
      ehm::read_tree(std::filesystem::path(a.tree));
  const ehm::PatchGrid grid(a.height, a.width, a.patch);
  const ehm::LabelMap map = ehm::partition_map(tree, grid, a.depth);
  std::cout << "partition " << grid.height_patches << ' '
            << grid.width_patches << ' ' << a.depth << ' ' << map.label_count
            << "\n";
  for (int row = 0; row < grid.height_patches; ++row) {
    for (int col = 0; col < grid.width_patches; ++col) {
      if (col > 0) std::cout << ' ';
      std::cout << map.labels[grid.index(row, col)];
    }
    std::cout << "\n";
  }
  return 0;
}

int run_analyze_stats(const AnalyzeArgs& a) {
  std::cout << "# config: analyze stats mask=" << a.mask << "\n";
  const ehm::Mask mask = ehm::read_mask(std::filesystem::path(a.mask));
  const ehm::MaskStats stats = ehm::mask_stats(mask);
  std::cout << "component_count=" << stats.component_count << "\n"
            << "mean_component_size=" << ehm::format_g6(stats.mean_component_size)
            << "\n"
            << "masked_fraction=" << ehm::format_g6(stats.masked_fraction)
            << "\n"
            << "bounding_coverage=" << ehm::format_g6(stats.bounding_coverage)
            << "\n";
  return 0;
}

int run_analyze_purity(const AnalyzeArgs& a) {
  std::cout << "# config: analyze purity mask=" << a.mask
            << " segments=" << a.segments << " scene-seed=" << a.scene_seed
            << "\n";
  const ehm::Mask mask = ehm::read_mask(std::filesystem::path(a.mask));
  const ehm::Scene scene =
      ehm::make_scene(mask.grid, a.segments, a.scene_seed);
  const ehm::PurityReport report = ehm::mask_purity(mask, scene);
  std::cout << "purity=" << ehm::format_g6(report.purity) << "\n";
  for (size_t i = 0; i < report.per_region.size(); ++i) {
    std::cout << "region_" << i << "=" << ehm::format_g6(report.per_region[i])
              << "\n";
  }
  return 0;
}

struct SimulateArgs {
  std::string config;
  std::string output;
  std::string dump_masks;
};

int run_simulate(const SimulateArgs& a) {
  std::cout << "# config: simulate config=" << a.config
            << " output=" << (a.output.empty() ? "-" : a.output)
            << " dump-masks=" << (a.dump_masks.empty() ? "-" : a.dump_masks)
            << "\n";
  const ehm::SimConfig config =
      ehm::load_sim_config(std::filesystem::path(a.config));
  std::optional<std::filesystem::path> dump;
  if (!a.dump_masks.empty()) {
    dump = std::filesystem::path(a.dump_masks);
    std::filesystem::create_directories(*dump);
  }
  const std::vector<ehm::EpochReport> reports =
      ehm::run_simulation(config, dump);
  ehm::write_reports(reports, std::cout);
  if (!a.output.empty()) {
    std::ofstream out(a.output, std::ios::binary);
    if (!out) {
      throw ehm::Error(ehm::Errc::io_error,
                       "cannot open " + a.output + " for writing");
    }
    ehm::write_reports(reports, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolved hierarchical masking toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenAttnArgs gen;
  CLI::App* gen_cmd =
      app.add_subcommand("gen-attn", "write synthetic oracle attention");
  gen_cmd->add_option("--height", gen.height)->required();
  gen_cmd->add_option("--width", gen.width)->required();
  gen_cmd->add_option("--patch-size", gen.patch);
  gen_cmd->add_option("--segments", gen.segments)->required();
  gen_cmd->add_option("--epsilon", gen.epsilon)->required();
  gen_cmd->add_option("--jitter", gen.jitter);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--images", gen.images);
  gen_cmd->add_option("--layers", gen.layers);
  gen_cmd->add_option("--heads", gen.heads);
  gen_cmd->add_option("--output", gen.output)->required();

  BuildTreeArgs build;
  CLI::App* build_cmd =
      app.add_subcommand("build-tree", "build the similarity hierarchy");
  build_cmd->add_option("--input", build.input)->required();
  build_cmd->add_option("--image", build.image);
  build_cmd->add_option("--layers", build.layers);
  build_cmd->add_option("--linkage", build.linkage)
      ->check(CLI::IsMember({"children-average", "leaf-average"}));
  build_cmd->add_option("--output", build.output)->required();

  MaskArgs mask;
  CLI::App* mask_cmd =
      app.add_subcommand("mask", "generate an evolved mask from a tree");
  mask_cmd->add_option("--tree", mask.tree)->required();
  mask_cmd->add_option("--epoch", mask.epoch)->required();
  mask_cmd->add_option("--epochs", mask.epochs)->required();
  mask_cmd->add_option("--ratio", mask.ratio);
  mask_cmd->add_option("--seed", mask.seed);
  mask_cmd->add_option("--depth-fixed", mask.depth_fixed);
  mask_cmd->add_option("--height", mask.height);
  mask_cmd->add_option("--width", mask.width);
  mask_cmd->add_option("--output", mask.output)->required();

  BaselineArgs base;
  CLI::App* base_cmd =
      app.add_subcommand("baseline", "generate a baseline mask pattern");
  base_cmd->add_option("--kind", base.kind)
      ->required()
      ->check(CLI::IsMember({"random", "grid", "block"}));
  base_cmd->add_option("--height", base.height)->required();
  base_cmd->add_option("--width", base.width)->required();
  base_cmd->add_option("--ratio", base.ratio);
  base_cmd->add_option("--seed", base.seed);
  base_cmd->add_option("--min-block", base.min_block);
  base_cmd->add_option("--output", base.output)->required();

  AnalyzeArgs analyze;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "diagnostics over files");
  analyze_cmd->require_subcommand(1);
  CLI::App* mad_cmd =
      analyze_cmd->add_subcommand("mad", "mean attention distance in px");
  mad_cmd->add_option("--input", analyze.input)->required();
  mad_cmd->add_option("--image", analyze.image);
  mad_cmd->add_option("--layers", analyze.layers);
  mad_cmd->add_option("--height", analyze.height)->required();
  mad_cmd->add_option("--width", analyze.width)->required();
  mad_cmd->add_option("--patch-size", analyze.patch);
  CLI::App* part_cmd =
      analyze_cmd->add_subcommand("partition", "frontier label map");
  part_cmd->add_option("--tree", analyze.tree)->required();
  part_cmd->add_option("--depth", analyze.depth)->required();
  part_cmd->add_option("--height", analyze.height)->required();
  part_cmd->add_option("--width", analyze.width)->required();
  CLI::App* stats_cmd =
      analyze_cmd->add_subcommand("stats", "mask statistics");
  stats_cmd->add_option("--mask", analyze.mask)->required();
  CLI::App* purity_cmd =
      analyze_cmd->add_subcommand("purity", "mask purity against a scene");
  purity_cmd->add_option("--mask", analyze.mask)->required();
  purity_cmd->add_option("--segments", analyze.segments)->required();
  purity_cmd->add_option("--scene-seed", analyze.scene_seed);

  SimulateArgs sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "run the co-evolution loop");
  sim_cmd->add_option("--config", sim.config)->required();
  sim_cmd->add_option("--output", sim.output);
  sim_cmd->add_option("--dump-masks", sim.dump_masks);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 3;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_attn(gen);
    if (build_cmd->parsed()) return run_build_tree(build);
    if (mask_cmd->parsed()) return run_mask(mask);
    if (base_cmd->parsed()) return run_baseline(base);
    if (analyze_cmd->parsed()) {
      if (mad_cmd->parsed()) return run_analyze_mad(analyze);
      if (part_cmd->parsed()) return run_analyze_partition(analyze);
      if (stats_cmd->parsed()) return run_analyze_stats(analyze);
      if (purity_cmd->parsed()) return run_analyze_purity(analyze);
    }
    if (sim_cmd->parsed()) return run_simulate(sim);
  } catch (const ehm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_format_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
