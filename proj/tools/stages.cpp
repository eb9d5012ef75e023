#include "stages.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "memaudit/checkpoint.hpp"
#include "memaudit/csv.hpp"
#include "memaudit/defenses.hpp"
#include "memaudit/error.hpp"
#include "memaudit/extraction.hpp"
#include "memaudit/inpaint_attack.hpp"
#include "memaudit/membership.hpp"
#include "memaudit/rng.hpp"
#include "memaudit/sampler.hpp"
#include "memaudit/sha256.hpp"
#include "memaudit/train.hpp"

namespace memaudit::cli {

namespace {

std::string bool_cell(bool v) { return v ? "1" : "0"; }

std::optional<int> label_of(const nlohmann::json& section, const char* key) {
  const int v = section.at(key).get<int>();
  if (v < 0) return std::nullopt;
  return v;
}

Dataset subset_dataset(const Dataset& data, const std::vector<std::uint8_t>& keep) {
  Dataset out;
  if (data.labels) out.labels.emplace();
  nlohmann::json source_ids = nlohmann::json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!keep[i]) continue;
    out.images.push_back(data.images[i]);
    if (data.labels) out.labels->push_back((*data.labels)[i]);
    out.ids.push_back(static_cast<int>(out.ids.size()));
    source_ids.push_back(data.ids[i]);
  }
  out.manifest["derived_from"] = data.manifest.value("source", "dataset");
  out.manifest["source_ids"] = std::move(source_ids);
  return out;
}

// floor(split * n) members, chosen by a seeded partial shuffle.
std::vector<std::uint8_t> draw_split_mask(std::size_t n, double split,
                                          std::uint64_t seed) {
  const std::size_t k = static_cast<std::size_t>(split * static_cast<double>(n));
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i)
    std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = 0; i < k; ++i) mask[perm[i]] = 1;
  return mask;
}

nlohmann::json checkpoint_header(const ExperimentConfig& cfg,
                                 const TrainingConfig& tc, long step) {
  const OptimizerConfig opt;
  return {{"schedule", cfg.section("schedule")},
          {"training", tc.to_json()},
          {"step", step},
          {"seed", tc.seed},
          {"optimizer",
           {{"second_moment_decay", opt.second_moment_decay},
            {"epsilon", opt.epsilon}}}};
}

TrainingConfig effective_training(RunContext& ctx) {
  TrainingConfig tc = ctx.cfg.training();
  if (tc.seed == 0) tc.seed = derive_seed(ctx.cfg.master_seed(), "train", 0);
  ctx.seeds["train"] = tc.seed;
  return tc;
}

struct LoadedModel {
  Checkpoint ckpt;
  NoiseSchedule schedule;
};

LoadedModel load_model(const RunContext& ctx, const nlohmann::json& section) {
  std::string path = section.at("checkpoint").get<std::string>();
  if (path.empty()) path = ctx.path_of("checkpoint.bin").string();
  if (!std::filesystem::exists(path))
    throw_error(ErrorCategory::State,
                "no checkpoint at " + path + "; run train first");
  LoadedModel lm;
  lm.ckpt = load_checkpoint(path);
  lm.schedule = schedule_from_header(lm.ckpt.header);
  return lm;
}

std::vector<GenerationBatch> sample_batches(const DenoiserModel& model,
                                            const NoiseSchedule& s,
                                            int n_generations, int per_batch,
                                            int stride, std::optional<int> label,
                                            std::uint64_t seed,
                                            const std::string& model_id) {
  if (n_generations < 1 || per_batch < 1)
    throw_error(ErrorCategory::Config, "generation counts must be >= 1");
  std::vector<GenerationBatch> batches;
  int produced = 0, index = 0;
  while (produced < n_generations) {
    const int count = std::min(per_batch, n_generations - produced);
    GenerationRequest req;
    req.seed = derive_seed(seed, "batch", index);
    req.label = label;
    req.count = count;
    GenerationBatch batch;
    batch.images = sample(model, s, req, stride);
    batch.seeds.resize(count);
    for (int k = 0; k < count; ++k)
      batch.seeds[k] = derive_seed(req.seed, "sample", k);
    batch.label = label;
    batch.model_id = model_id;
    batches.push_back(std::move(batch));
    produced += count;
    ++index;
  }
  return batches;
}

Dataset images_as_dataset(const std::vector<Image>& images,
                          const std::string& source) {
  Dataset out;
  out.images = images;
  out.ids.resize(images.size());
  for (std::size_t i = 0; i < images.size(); ++i)
    out.ids[i] = static_cast<int>(i);
  out.manifest["source"] = source;
  return out;
}

AttackScoreSet negated_loss_scores(const DenoiserModel& target,
                                   const Dataset& data, const NoiseSchedule& s,
                                   const std::vector<std::uint8_t>& membership,
                                   int t, int n_noise, bool use_flip,
                                   std::uint64_t noise_seed) {
  AttackScoreSet set;
  set.attack_id = "loss-threshold";
  set.t = t;
  set.n_noise = n_noise;
  set.use_flip = use_flip;
  set.entries.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double loss =
        averaged_loss(target, s, data.images[i], t, n_noise, use_flip,
                      derive_seed(noise_seed, "lira-eps", i));
    set.entries[i] = {data.ids[i], -loss, membership[i] != 0};
  }
  return set;
}

void write_roc(RunContext& ctx, const std::string& name,
               const std::vector<RocPoint>& curve) {
  CsvTable table;
  table.header = {"fpr", "tpr", "threshold"};
  for (const auto& p : curve)
    table.rows.push_back(
        {format_sig9(p.fpr), format_sig9(p.tpr), format_sig9(p.threshold)});
  write_csv(ctx.path_of(name).string(), table);
  ctx.note_artifact(name);
}

void write_scores(RunContext& ctx, const std::string& name,
                  const AttackScoreSet& scores) {
  CsvTable table;
  table.header = {"example_id", "score", "is_member"};
  for (const auto& e : scores.entries)
    table.rows.push_back({std::to_string(e.example_id), format_sig9(e.score),
                          bool_cell(e.is_member)});
  write_csv(ctx.path_of(name).string(), table);
  ctx.note_artifact(name);
}

void write_json_artifact(RunContext& ctx, const std::string& name,
                         nlohmann::json doc) {
  doc["format_version"] = 1;
  std::ofstream out(ctx.path_of(name));
  if (!out)
    throw_error(ErrorCategory::Format, "cannot write " + ctx.path_of(name).string());
  out << doc.dump(2) << "\n";
  out.close();
  ctx.note_artifact(name);
}

struct MiaSetup {
  Dataset data;
  NoiseSchedule schedule;
  ArchConfig arch;
  TrainingConfig train_cfg;
  ShadowEnsemble ensemble;
  DenoiserModel target;
  std::vector<std::uint8_t> membership;
  LiRAConfig lira;
};

MiaSetup prepare_mia(RunContext& ctx, const CheckpointSink& target_sink = {}) {
  const nlohmann::json& m = ctx.cfg.section("mia");
  MiaSetup setup;
  setup.data = ctx.cfg.load_dataset();
  setup.schedule = ctx.cfg.schedule();
  setup.arch = ctx.cfg.arch_for(setup.data);
  setup.train_cfg = effective_training(ctx);

  const double split = m.at("split").get<double>();
  setup.ensemble =
      train_shadow_models(setup.data, m.at("shadow_count").get<int>(), split,
                          setup.train_cfg, setup.schedule, setup.arch);

  const std::uint64_t split_seed =
      derive_seed(ctx.cfg.master_seed(), "target-split", 0);
  ctx.seeds["target-split"] = split_seed;
  setup.membership = draw_split_mask(setup.data.size(), split, split_seed);
  TrainingConfig target_cfg = setup.train_cfg;
  target_cfg.seed = derive_seed(ctx.cfg.master_seed(), "target-train", 0);
  ctx.seeds["target-train"] = target_cfg.seed;
  setup.target = train(subset_dataset(setup.data, setup.membership), target_cfg,
                       setup.schedule, setup.arch, target_sink);

  setup.lira.t = m.at("t").get<int>();
  setup.lira.n_noise = m.at("n_noise").get<int>();
  setup.lira.use_flip = m.at("use_flip").get<bool>();
  setup.lira.per_example_variance = m.at("per_example_variance").get<bool>();
  setup.lira.noise_seed = derive_seed(ctx.cfg.master_seed(), "mia-noise", 0);
  ctx.seeds["mia-noise"] = setup.lira.noise_seed;
  return setup;
}

}  // namespace

std::filesystem::path RunContext::path_of(const std::string& name) const {
  return out_dir / name;
}

void RunContext::note_artifact(const std::string& name) {
  artifacts.push_back(
      {{"path", name}, {"sha256", sha256_file_hex(path_of(name).string())}});
}

void RunContext::write_manifest(const std::string& subcommand) {
  nlohmann::json manifest = {{"format_version", 1},
                             {"subcommand", subcommand},
                             {"config", cfg.doc},
                             {"seeds", seeds},
                             {"artifacts", artifacts}};
  std::ofstream out(path_of("run_manifest.json"));
  if (!out)
    throw_error(ErrorCategory::Format,
                "cannot write " + path_of("run_manifest.json").string());
  out << manifest.dump(2) << "\n";
}

int cmd_train(RunContext& ctx) {
  const Dataset data = ctx.cfg.load_dataset();
  const NoiseSchedule s = ctx.cfg.schedule();
  const ArchConfig arch = ctx.cfg.arch_for(data);
  const TrainingConfig tc = effective_training(ctx);

  std::vector<std::string> intermediate;
  CheckpointSink sink;
  if (tc.checkpoint_every > 0) {
    sink = [&](long step, const DenoiserModel& m) {
      if (step == tc.steps) return;  // the final model is saved below
      const std::string name = "checkpoint_" + std::to_string(step) + ".bin";
      save_checkpoint(ctx.path_of(name).string(), m,
                      checkpoint_header(ctx.cfg, tc, step));
      intermediate.push_back(name);
    };
  }
  const DenoiserModel model = train(data, tc, s, arch, sink);
  save_checkpoint(ctx.path_of("checkpoint.bin").string(), model,
                  checkpoint_header(ctx.cfg, tc, tc.steps));
  for (const std::string& name : intermediate) ctx.note_artifact(name);
  ctx.note_artifact("checkpoint.bin");
  ctx.write_manifest("train");
  std::cout << "trained " << tc.steps << " steps, " << model.param_count()
            << " parameters\n";
  return 0;
}

int cmd_generate(RunContext& ctx) {
  const nlohmann::json& g = ctx.cfg.section("generate");
  const LoadedModel lm = load_model(ctx, g);
  GenerationRequest req;
  req.seed = derive_seed(ctx.cfg.master_seed(), "generate", 0);
  ctx.seeds["generate"] = req.seed;
  req.label = label_of(g, "label");
  req.count = g.at("count").get<int>();
  const std::vector<Image> images =
      sample(lm.ckpt.model, lm.schedule, req, g.at("stride").get<int>());
  export_raw(images_as_dataset(images, "generate"),
             ctx.path_of("generations.f32").string(),
             ctx.path_of("generations.json").string());
  ctx.note_artifact("generations.f32");
  ctx.note_artifact("generations.json");
  ctx.write_manifest("generate");
  std::cout << "generated " << images.size() << " images\n";
  return 0;
}

int cmd_extract(RunContext& ctx) {
  const nlohmann::json& e = ctx.cfg.section("extract");
  const Dataset data = ctx.cfg.load_dataset();
  const LoadedModel lm = load_model(ctx, e);
  const std::uint64_t gen_seed = derive_seed(ctx.cfg.master_seed(), "extract", 0);
  ctx.seeds["extract"] = gen_seed;

  const std::vector<GenerationBatch> batches = sample_batches(
      lm.ckpt.model, lm.schedule, e.at("n_generations").get<int>(),
      e.at("generations_per_batch").get<int>(), e.at("stride").get<int>(),
      label_of(e, "label"), gen_seed, "extract");

  // Per-batch clique flags under the tiled distance.
  CsvTable cliques;
  cliques.header = {"batch", "clique_size", "representative",
                    "mean_intra_distance", "exact"};
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto flagged = flag_memorized(
        batches[b], e.at("clique_threshold").get<double>(),
        e.at("clique_min").get<int>(), e.at("grid_rows").get<int>(),
        e.at("grid_cols").get<int>());
    if (!flagged) continue;
    cliques.rows.push_back({std::to_string(b),
                            std::to_string(flagged->clique.size()),
                            std::to_string(flagged->representative),
                            format_sig9(flagged->mean_intra_distance),
                            bool_cell(flagged->exact)});
  }
  write_csv(ctx.path_of("cliques.csv").string(), cliques);
  ctx.note_artifact("cliques.csv");

  ExtractionScanConfig scan;
  scan.alpha = e.at("alpha").get<double>();
  scan.n_neighbors = e.at("n_neighbors").get<int>();
  scan.score_cutoff = e.at("score_cutoff").get<double>();
  scan.delta_extract = e.at("delta_extract").get<double>();
  scan.delta_eidetic = e.at("delta_eidetic").get<double>();
  const ExtractionScanResult result =
      untargeted_extraction_scan(batches, data, scan);

  CsvTable records;
  records.header = {"generation_id", "training_id", "l2",
                    "score",         "clique_size", "extracted",
                    "eidetic_k"};
  int extracted = 0;
  for (const auto& r : result.records) {
    records.rows.push_back(
        {std::to_string(r.generation_id),
         r.training_id ? std::to_string(*r.training_id) : std::string(),
         format_sig9(r.l2), format_sig9(r.score), std::to_string(r.clique_size),
         bool_cell(r.extracted), std::to_string(r.eidetic_k)});
    if (r.extracted) ++extracted;
  }
  write_csv(ctx.path_of("extraction_records.csv").string(), records);
  ctx.note_artifact("extraction_records.csv");
  write_json_artifact(ctx, "extraction_summary.json",
                      {{"extracted_count", extracted},
                       {"n_generations", e.at("n_generations")},
                       {"warnings", result.warnings}});
  ctx.write_manifest("extract");
  std::cout << "extracted " << extracted << " unique training images\n";
  return 0;
}

int cmd_mia(RunContext& ctx) {
  const MiaSetup setup = prepare_mia(ctx);
  const nlohmann::json& m = ctx.cfg.section("mia");

  const AttackScoreSet lira = run_lira(setup.ensemble, setup.target, setup.data,
                                       setup.schedule, setup.membership,
                                       setup.lira);
  const std::vector<RocPoint> lira_roc = roc_curve(lira);

  const int eval_t =
      setup.lira.t > 0 ? setup.lira.t : std::max(1, setup.schedule.T / 10);
  const AttackScoreSet loss = negated_loss_scores(
      setup.target, setup.data, setup.schedule, setup.membership, eval_t,
      setup.lira.n_noise, setup.lira.use_flip, setup.lira.noise_seed);
  const std::vector<RocPoint> loss_roc = roc_curve(loss);

  write_scores(ctx, "lira_scores.csv", lira);
  write_roc(ctx, "lira_roc.csv", lira_roc);
  write_scores(ctx, "loss_scores.csv", loss);
  write_roc(ctx, "loss_roc.csv", loss_roc);

  nlohmann::json tpr_lira = nlohmann::json::object();
  nlohmann::json tpr_loss = nlohmann::json::object();
  for (double fpr : m.at("fpr").get<std::vector<double>>()) {
    tpr_lira[format_sig9(fpr)] = tpr_at_fpr(lira_roc, fpr);
    tpr_loss[format_sig9(fpr)] = tpr_at_fpr(loss_roc, fpr);
  }
  write_json_artifact(ctx, "mia_summary.json",
                      {{"t", eval_t},
                       {"lira_auc", roc_auc(lira_roc)},
                       {"loss_auc", roc_auc(loss_roc)},
                       {"lira_tpr_at_fpr", tpr_lira},
                       {"loss_tpr_at_fpr", tpr_loss}});
  ctx.write_manifest("mia");
  std::cout << "lira auc " << roc_auc(lira_roc) << ", loss auc "
            << roc_auc(loss_roc) << "\n";
  return 0;
}

int cmd_sweep_t(RunContext& ctx) {
  const MiaSetup setup = prepare_mia(ctx);
  const nlohmann::json& m = ctx.cfg.section("mia");
  std::vector<int> t_list = m.at("t_list").get<std::vector<int>>();
  if (t_list.empty()) {
    const int T = setup.schedule.T;
    t_list = {1, std::max(1, T / 10), std::max(1, T / 4), std::max(1, T / 2),
              std::max(1, 9 * T / 10)};
  }
  const std::vector<double> fprs = m.at("fpr").get<std::vector<double>>();
  const double fpr = fprs.empty() ? 0.1 : fprs.back();

  const auto sweep =
      timestep_sweep(setup.ensemble, setup.target, setup.data, setup.schedule,
                     setup.membership, t_list, fpr, setup.lira);
  CsvTable table;
  table.header = {"t", "tpr"};
  for (const auto& [t, tpr] : sweep)
    table.rows.push_back({std::to_string(t), format_sig9(tpr)});
  write_csv(ctx.path_of("sweep_t.csv").string(), table);
  ctx.note_artifact("sweep_t.csv");
  ctx.write_manifest("sweep-t");
  return 0;
}

int cmd_progress(RunContext& ctx) {
  std::vector<std::pair<long, DenoiserModel>> checkpoints;
  CheckpointSink sink = [&](long step, const DenoiserModel& m) {
    if (!checkpoints.empty() && checkpoints.back().first == step) return;
    checkpoints.push_back({step, m});
  };
  const MiaSetup setup = prepare_mia(ctx, sink);
  if (setup.train_cfg.checkpoint_every <= 0)
    throw_error(ErrorCategory::Config,
                "progress needs train.checkpoint_every > 0");
  const nlohmann::json& m = ctx.cfg.section("mia");
  const std::vector<double> fprs = m.at("fpr").get<std::vector<double>>();
  const double fpr = fprs.empty() ? 0.1 : fprs.back();

  const TrainingProgressResult result = training_progress_attack(
      checkpoints, setup.ensemble, setup.data, setup.schedule, setup.membership,
      fpr, setup.lira);

  CsvTable series;
  series.header = {"step", "tpr"};
  for (const auto& p : result.series)
    series.rows.push_back({std::to_string(p.step), format_sig9(p.tpr)});
  write_csv(ctx.path_of("progress.csv").string(), series);
  ctx.note_artifact("progress.csv");

  CsvTable first;
  first.header = {"example_id", "first_success_step"};
  for (const auto& [id, step] : result.first_success_step)
    first.rows.push_back({std::to_string(id), std::to_string(step)});
  write_csv(ctx.path_of("first_success.csv").string(), first);
  ctx.note_artifact("first_success.csv");
  ctx.write_manifest("progress");
  return 0;
}

int cmd_inpaint(RunContext& ctx) {
  const nlohmann::json& ip = ctx.cfg.section("inpaint");
  const Dataset data = ctx.cfg.load_dataset();
  const NoiseSchedule s = ctx.cfg.schedule();
  const ArchConfig arch = ctx.cfg.arch_for(data);
  const TrainingConfig tc = effective_training(ctx);

  const int n_targets = ip.at("n_targets").get<int>();
  if (n_targets < 1 || static_cast<std::size_t>(n_targets) * 2 >= data.size())
    throw_error(ErrorCategory::Config,
                "inpaint: n_targets must be >= 1 and well below the dataset size");

  // Seeded target pick, then three models: IN (all data), OUT (targets held
  // out), and a support model on half the non-target data (OUT for all
  // targets, used as the contrastive denominator).
  const std::uint64_t pick_seed =
      derive_seed(ctx.cfg.master_seed(), "inpaint-targets", 0);
  ctx.seeds["inpaint-targets"] = pick_seed;
  std::vector<std::size_t> perm(data.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(pick_seed);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
  std::vector<std::size_t> target_idx(perm.begin(), perm.begin() + n_targets);
  std::sort(target_idx.begin(), target_idx.end());

  std::vector<std::uint8_t> non_target(data.size(), 1);
  for (std::size_t i : target_idx) non_target[i] = 0;
  std::vector<std::uint8_t> support_half(data.size(), 0);
  {
    std::size_t parity = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (non_target[i]) support_half[i] = (parity++ % 2 == 0);
  }

  auto train_variant = [&](const std::vector<std::uint8_t>& keep,
                           const char* tag) {
    TrainingConfig cfg = tc;
    cfg.seed = derive_seed(tc.seed, tag, 0);
    return train(subset_dataset(data, keep), cfg, s, arch);
  };
  const DenoiserModel in_model =
      train_variant(std::vector<std::uint8_t>(data.size(), 1), "inpaint-in");
  const DenoiserModel out_model = train_variant(non_target, "inpaint-out");
  const DenoiserModel support = train_variant(support_half, "inpaint-support");

  InpaintAttackConfig cfg;
  const std::string mask_kind = ip.at("mask_kind").get<std::string>();
  if (mask_kind == "left-half")
    cfg.mask.kind = MaskSpec::Kind::LeftHalf;
  else if (mask_kind == "central")
    cfg.mask.kind = MaskSpec::Kind::CentralFraction;
  else if (mask_kind == "random")
    cfg.mask.kind = MaskSpec::Kind::Random;
  else
    throw_error(ErrorCategory::Config, "unknown mask kind: " + mask_kind);
  cfg.mask.fraction = ip.at("mask_fraction").get<double>();
  cfg.mask.seed = derive_seed(ctx.cfg.master_seed(), "inpaint-mask", 0);
  cfg.n = ip.at("n").get<int>();
  cfg.top_k = ip.at("top_k").get<int>();
  cfg.t = ip.at("t").get<int>();
  cfg.n_noise = ip.at("n_noise").get<int>();
  cfg.sampler.jump_len = ip.at("jump_len").get<int>();
  cfg.sampler.n_resample = ip.at("n_resample").get<int>();
  cfg.sampler.stride = ip.at("stride").get<int>();
  cfg.seed = derive_seed(ctx.cfg.master_seed(), "inpaint", 0);
  ctx.seeds["inpaint"] = cfg.seed;

  std::vector<std::pair<int, Image>> targets;
  std::vector<TargetModels> models;
  for (std::size_t i : target_idx) {
    targets.push_back({data.ids[i], data.images[i]});
    models.push_back({&in_model, &out_model, &support});
  }
  const std::vector<TargetOutcome> outcomes =
      evaluate_attack(targets, models, s, cfg);

  CsvTable table;
  table.header = {"target_id",      "in_mean_masked_l2", "out_mean_masked_l2",
                  "masked_gap",     "in_mean_full_l2",   "out_mean_full_l2"};
  int in_wins = 0;
  for (const auto& o : outcomes) {
    table.rows.push_back({std::to_string(o.target_id),
                          format_sig9(o.in_mean_masked_l2),
                          format_sig9(o.out_mean_masked_l2),
                          format_sig9(o.out_mean_masked_l2 - o.in_mean_masked_l2),
                          format_sig9(o.in_mean_full_l2),
                          format_sig9(o.out_mean_full_l2)});
    if (o.in_mean_masked_l2 < o.out_mean_masked_l2) ++in_wins;
  }
  write_csv(ctx.path_of("inpaint.csv").string(), table);
  ctx.note_artifact("inpaint.csv");
  write_json_artifact(ctx, "inpaint_summary.json",
                      {{"targets", outcomes.size()}, {"in_wins", in_wins}});
  ctx.write_manifest("inpaint");
  std::cout << "IN model closer on " << in_wins << " of " << outcomes.size()
            << " targets\n";
  return 0;
}

int cmd_dedup(RunContext& ctx) {
  const nlohmann::json& d = ctx.cfg.section("dedup");
  const Dataset data = ctx.cfg.load_dataset();
  const double threshold = d.at("threshold").get<double>();
  const DedupResult result = deduplicate(data, threshold);

  CsvTable removed;
  removed.header = {"id", "representative_id", "similarity"};
  for (const auto& r : result.removed)
    removed.rows.push_back({std::to_string(r.id),
                            std::to_string(r.representative_id),
                            format_sig9(r.similarity)});
  write_csv(ctx.path_of("dedup_removed.csv").string(), removed);
  ctx.note_artifact("dedup_removed.csv");

  CsvTable kept;
  kept.header = {"id"};
  for (int id : result.kept_ids) kept.rows.push_back({std::to_string(id)});
  write_csv(ctx.path_of("dedup_kept.csv").string(), kept);
  ctx.note_artifact("dedup_kept.csv");

  nlohmann::json summary = {{"threshold", threshold},
                            {"count_original", data.size()},
                            {"count_kept", result.kept_ids.size()},
                            {"count_removed", result.removed.size()}};

  if (d.at("experiment").get<bool>()) {
    const nlohmann::json& e = ctx.cfg.section("extract");
    DedupExperimentConfig exp;
    exp.threshold = threshold;
    exp.train = effective_training(ctx);
    exp.arch = ctx.cfg.arch_for(data);
    exp.n_generations = d.at("n_generations").get<int>();
    exp.generations_per_batch = d.at("generations_per_batch").get<int>();
    exp.sample_stride = d.at("stride").get<int>();
    exp.sample_seed = derive_seed(ctx.cfg.master_seed(), "dedup-sample", 0);
    ctx.seeds["dedup-sample"] = exp.sample_seed;
    exp.scan.alpha = e.at("alpha").get<double>();
    exp.scan.n_neighbors = e.at("n_neighbors").get<int>();
    exp.scan.score_cutoff = e.at("score_cutoff").get<double>();
    exp.scan.delta_extract = e.at("delta_extract").get<double>();
    exp.scan.delta_eidetic = e.at("delta_eidetic").get<double>();
    const DedupExperimentResult r =
        dedup_defense_experiment(data, ctx.cfg.schedule(), exp);
    summary["count_before"] = r.count_before;
    summary["count_after"] = r.count_after;
    std::cout << "extractions before " << r.count_before << ", after "
              << r.count_after << "\n";
  }
  write_json_artifact(ctx, "dedup_summary.json", summary);
  ctx.write_manifest("dedup");
  std::cout << "kept " << result.kept_ids.size() << " of " << data.size()
            << " images\n";
  return 0;
}

int cmd_canary(RunContext& ctx) {
  const nlohmann::json& c = ctx.cfg.section("canary");
  const Dataset data = ctx.cfg.load_dataset();
  const NoiseSchedule s = ctx.cfg.schedule();
  const ArchConfig arch = ctx.cfg.arch_for(data);
  const TrainingConfig tc = effective_training(ctx);

  const std::uint64_t pool_seed =
      derive_seed(ctx.cfg.master_seed(), "canary-pool", 0);
  ctx.seeds["canary-pool"] = pool_seed;
  const CanaryPool pool =
      generate_canaries(c.at("pool_size").get<int>(), arch.h, arch.w, arch.c,
                        pool_seed);
  const auto duplicate_counts =
      c.at("duplicate_counts").get<std::vector<std::pair<int, int>>>();
  const std::uint64_t loss_seed =
      derive_seed(ctx.cfg.master_seed(), "canary-loss", 0);
  ctx.seeds["canary-loss"] = loss_seed;

  const CanaryAuditResult result = canary_audit(
      data, pool, duplicate_counts, tc, s, arch, c.at("t").get<int>(),
      c.at("n_noise").get<int>(), loss_seed);

  CsvTable exposures;
  exposures.header = {"canary_id", "duplicate_count", "loss", "exposure"};
  for (int i = 0; i < pool.pool_size; ++i) {
    int count = 0;
    for (const auto& [id, k] : duplicate_counts)
      if (id == i) count = k;
    exposures.rows.push_back({std::to_string(i), std::to_string(count),
                              format_sig9(result.pool.losses[i]),
                              format_sig9(result.exposures[i])});
  }
  write_csv(ctx.path_of("canary_exposures.csv").string(), exposures);
  ctx.note_artifact("canary_exposures.csv");

  CsvTable table;
  table.header = {"duplicate_count", "max_exposure"};
  for (const auto& row : result.table)
    table.rows.push_back(
        {std::to_string(row.duplicate_count), format_sig9(row.max_exposure)});
  write_csv(ctx.path_of("canary_table.csv").string(), table);
  ctx.note_artifact("canary_table.csv");
  ctx.write_manifest("canary");
  return 0;
}

int cmd_report(RunContext& ctx) {
  const std::string path = ctx.path_of("extraction_records.csv").string();
  std::ifstream in(path);
  if (!in)
    throw_error(ErrorCategory::State,
                "report needs a finished extraction run: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw_error(ErrorCategory::Format, "empty records file: " + path);

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw_error(ErrorCategory::Format, "records file lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t score_col = col("score"), extracted_col = col("extracted");

  std::vector<std::pair<double, bool>> scored;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (cells.size() < header.size()) cells.push_back("");
    scored.push_back({std::stod(cells[score_col]), cells[extracted_col] == "1"});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::vector<PrecisionRecallPoint> pr = precision_recall(scored);
  CsvTable table;
  table.header = {"rank", "score", "precision", "extracted_count"};
  for (const auto& p : pr)
    table.rows.push_back({std::to_string(p.rank), format_sig9(p.score),
                          format_sig9(p.precision),
                          std::to_string(p.extracted_count)});
  write_csv(ctx.path_of("precision_recall.csv").string(), table);
  ctx.note_artifact("precision_recall.csv");
  ctx.write_manifest("report");
  return 0;
}

}  // namespace memaudit::cli
