#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "rega/checkpoint.hpp"
#include "rega/error.hpp"
#include "rega/gradcheck.hpp"
#include "rega/pgm.hpp"
#include "rega/rng.hpp"
#include "rega/train.hpp"

namespace {

rega::Config assemble_config(const std::string& config_path,
                             const std::map<std::string, std::string>& overrides) {
  rega::Config cfg;
  if (!config_path.empty()) cfg = rega::Config::from_file(config_path);
  for (const auto& [key, value] : overrides) cfg.set(key, value);
  return cfg;
}

int cmd_train(const rega::Config& cfg) {
  const rega::TrainConfig tc = rega::train_config_from(cfg);
  const rega::TrainResult r = rega::train(tc);
  std::printf("%s", rega::metrics_csv(r.log).c_str());
  std::printf("best top-1 %.2f%% at epoch %d\n", r.best_top1, r.best_epoch);
  if (!tc.out_dir.empty()) std::printf("outputs in %s\n", tc.out_dir.c_str());
  return 0;
}

int cmd_eval(const rega::Config& cfg, const std::string& ckpt) {
  const rega::TrainConfig tc = rega::train_config_from(cfg);
  rega::Model model = rega::build_network(tc.net, rega::derive_seed(tc.seed, "model"));
  rega::load_checkpoint(ckpt, model.params);
  const auto [train_ds, val_ds] = rega::make_datasets(tc);
  const rega::EvalResult ev = rega::evaluate(model, val_ds, tc.batch_size);
  std::printf("top1 %.4f\ntop5 %.4f\n", ev.top1, ev.top5);
  return 0;
}

int cmd_gradcheck(const std::string& target, std::uint64_t seed) {
  const rega::GradCheckReport report = rega::run_gradcheck(target, seed);
  std::printf("%s", report.to_string().c_str());
  if (!report.all_pass()) {
    std::fprintf(stderr, "gradcheck failed\n");
    return 2;
  }
  return 0;
}

int cmd_mask_show(const rega::Config& cfg) {
  const rega::TrainConfig tc = rega::train_config_from(cfg);
  const rega::RetinaMask mask =
      rega::build_mask(tc.net.mask_size, tc.net.mask_r1, tc.net.mask_variant);
  std::printf("mask %dx%d, r1=%.3f, r2=%.3f, %s, %d active cells\n", mask.size, mask.size,
              mask.r1, mask.r2, mask.variant == rega::MaskVariant::HARD ? "hard" : "soft",
              mask.ones_count());
  std::printf("%s", rega::render_cells(mask).c_str());
  std::printf("classes:\n%s", rega::render_classes(mask).c_str());
  return 0;
}

int cmd_export_kernels(const rega::Config& cfg, const std::string& ckpt,
                       const std::string& out_dir) {
  const rega::TrainConfig tc = rega::train_config_from(cfg);
  rega::Model model = rega::build_network(tc.net, rega::derive_seed(tc.seed, "model"));
  rega::load_checkpoint(ckpt, model.params);
  int exported = 0;
  auto export_module = [&](const rega::RegaAttentionModule& m, const std::string& site) {
    for (std::size_t k = 0; k < m.blocks.size(); ++k) {
      rega::export_bank_kernels(m.blocks[k].bank, site + ".rg" + std::to_string(k), out_dir);
      exported += m.blocks[k].bank.cin * m.blocks[k].bank.cout;
    }
  };
  for (const auto& [stage, module] : model.attention) export_module(module, rega::layer_tag(stage));
  if (model.fusion) {
    export_module(model.fusion->attn_c1, "C1");
    export_module(model.fusion->attn_c2, "C2");
  }
  if (exported == 0) {
    std::fprintf(stderr, "network has no Gabor banks to export\n");
    return 1;
  }
  std::printf("wrote %d kernel images to %s\n", exported, out_dir.c_str());
  return 0;
}

int cmd_gen_data(const rega::Config& cfg, const std::string& out_dir) {
  const rega::TrainConfig tc = rega::train_config_from(cfg);
  if (tc.net.in_channels != 1)
    throw rega::ValueError("gen-data: IDX export needs net.in_channels=1");
  const auto [train_ds, val_ds] = rega::make_datasets(tc);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw rega::IoError("gen-data: cannot create " + out_dir + ": " + ec.message());
  const std::filesystem::path dir(out_dir);
  rega::save_idx_dataset((dir / "train-images.idx").string(), (dir / "train-labels.idx").string(),
                         train_ds);
  rega::save_idx_dataset((dir / "val-images.idx").string(), (dir / "val-labels.idx").string(),
                         val_ds);
  std::printf("wrote %d train / %d val samples to %s\n", train_ds.n, val_ds.n, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retina-masked Gabor attention networks"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key=value config file");
  std::map<std::string, std::string> overrides;
  for (const std::string& key : rega::known_config_keys())
    app.add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
        "override config key " + key);

  auto* sub_train = app.add_subcommand("train", "train a network and log metrics");
  auto* sub_eval = app.add_subcommand("eval", "evaluate a checkpoint on the validation split");
  std::string ckpt_path;
  sub_eval->add_option("--checkpoint", ckpt_path, "RGKP checkpoint")->required();
  auto* sub_grad = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  std::string gc_target = "all";
  std::uint64_t gc_seed = 1;
  sub_grad->add_option("--target", gc_target, "gabor|kernel|ops|network|fusion|all");
  sub_grad->add_option("--seed", gc_seed, "probe seed");
  auto* sub_mask = app.add_subcommand("mask-show", "print the retina mask and class map");
  auto* sub_export = app.add_subcommand("export-kernels", "write kernel slices as PGM images");
  std::string export_ckpt, export_dir = "kernels";
  sub_export->add_option("--checkpoint", export_ckpt, "RGKP checkpoint")->required();
  sub_export->add_option("--out", export_dir, "output directory");
  auto* sub_gen = app.add_subcommand("gen-data", "write the synthetic dataset as IDX files");
  std::string gen_dir = "data";
  sub_gen->add_option("--out", gen_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const rega::Config cfg = assemble_config(config_path, overrides);
    if (sub_train->parsed()) return cmd_train(cfg);
    if (sub_eval->parsed()) return cmd_eval(cfg, ckpt_path);
    if (sub_grad->parsed()) return cmd_gradcheck(gc_target, gc_seed);
    if (sub_mask->parsed()) return cmd_mask_show(cfg);
    if (sub_export->parsed()) return cmd_export_kernels(cfg, export_ckpt, export_dir);
    if (sub_gen->parsed()) return cmd_gen_data(cfg, gen_dir);
  } catch (const rega::ValueError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
