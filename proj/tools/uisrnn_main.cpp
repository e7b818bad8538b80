// Command-line front end: simulate, pca, estimate-priors, train, decode,
// evaluate, sweep-n. Every run logs its resolved configuration and seed;
// identical command lines with identical seeds produce identical artifacts.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uisrnn/dataset.hpp"
#include "uisrnn/decoder.hpp"
#include "uisrnn/evaluation.hpp"
#include "uisrnn/io.hpp"
#include "uisrnn/model.hpp"
#include "uisrnn/pca.hpp"
#include "uisrnn/synthesis.hpp"
#include "uisrnn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool g_log_json = false;

void install_log_sink() {
  uisrnn::set_log_sink([](std::string_view level, std::string_view msg) {
    if (g_log_json) {
      ordered_json line;
      line["level"] = std::string(level);
      line["message"] = std::string(msg);
      std::cerr << line.dump() << "\n";
    } else {
      std::cerr << "[" << level << "] " << msg << "\n";
    }
  });
}

void log_resolved_config(const std::string& command, const ordered_json& cfg) {
  ordered_json line;
  line["command"] = command;
  line["config"] = cfg;
  uisrnn::log_info(g_log_json ? line.dump() : command + " " + cfg.dump());
}

std::string two_digits(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

ordered_json breakdown_json(const uisrnn::DerBreakdown& b) {
  ordered_json out;
  out["missed"] = b.missed;
  out["false_alarm"] = b.false_alarm;
  out["confusion"] = b.confusion;
  out["total"] = b.total;
  out["der"] = b.der();
  return out;
}

struct SplitOptions {
  std::string manifest;
  std::string val_manifest;  // empty = derive by stratified split
  double split_ratio = 0.8;
  std::uint64_t seed = 1;
};

struct CorpusSplit {
  uisrnn::Dataset train;
  uisrnn::Dataset validation;
  std::vector<uisrnn::FrameReference> validation_refs;
};

CorpusSplit load_split(const SplitOptions& opts) {
  CorpusSplit out;
  if (!opts.val_manifest.empty()) {
    auto train = uisrnn::load_corpus(opts.manifest);
    auto val = uisrnn::load_corpus(opts.val_manifest);
    out.train = std::move(train.dataset);
    out.validation = std::move(val.dataset);
    out.validation_refs = std::move(val.references);
    return out;
  }
  auto corpus = uisrnn::load_corpus(opts.manifest);
  auto split = uisrnn::stratified_split(corpus.dataset, opts.split_ratio,
                                        uisrnn::derive_seed(opts.seed, "holdout"));
  out.train = std::move(split.train);
  out.validation = std::move(split.validation);
  for (int idx : split.validation_indices)
    out.validation_refs.push_back(corpus.references[idx]);
  return out;
}

double decode_corpus_der(const uisrnn::SpeakerModel& model,
                         const uisrnn::PriorParams& priors,
                         const uisrnn::Dataset& validation,
                         const std::vector<uisrnn::FrameReference>& refs,
                         int beam_width, int threads) {
  uisrnn::DecodeConfig config;
  config.beam_width = beam_width;
  std::vector<uisrnn::LabelSequence> hyps(validation.recordings.size());
  uisrnn::parallel_for(validation.recordings.size(), threads, [&](std::size_t i) {
    hyps[i] = uisrnn::beam_decode(validation.recordings[i].embeddings, model,
                                  priors, config)
                  .labels;
  });
  std::vector<uisrnn::ScoredRecording> pairs;
  for (std::size_t i = 0; i < hyps.size(); ++i)
    pairs.push_back({validation.recordings[i].domain, &refs[i], &hyps[i]});
  return uisrnn::der_corpus(pairs).overall.der();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const uisrnn::SynthConfig& base, int count,
                 const std::string& out_dir, const std::string& domain) {
  fs::create_directories(out_dir);
  std::vector<uisrnn::ManifestEntry> entries;
  for (int i = 0; i < count; ++i) {
    std::ostringstream id;
    id << "rec" << std::setw(4) << std::setfill('0') << i + 1;
    uisrnn::SynthConfig cfg = base;
    cfg.seed = uisrnn::derive_seed(base.seed, "recording", i);
    auto synth = uisrnn::generate(cfg, id.str(), domain);

    std::string emb_rel = id.str() + ".uemb";
    std::string lab_rel = id.str() + ".labels";
    std::string rttm_rel = id.str() + ".rttm";
    uisrnn::write_embeddings(synth.recording.embeddings,
                             (fs::path(out_dir) / emb_rel).string());
    uisrnn::write_labels(synth.recording.labels,
                         (fs::path(out_dir) / lab_rel).string());
    uisrnn::write_text_file(
        (fs::path(out_dir) / rttm_rel).string(),
        uisrnn::format_rttm(
            uisrnn::reference_to_segments(synth.reference, id.str())));

    uisrnn::ManifestEntry entry;
    entry.id = id.str();
    entry.domain = domain;
    entry.embeddings_path = emb_rel;
    entry.labels_path = lab_rel;
    entry.rttm_path = rttm_rel;
    entries.push_back(std::move(entry));
  }
  uisrnn::write_manifest(entries, (fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote " << count << " recordings to " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / sweep-n
// ---------------------------------------------------------------------------

struct TrainFlags {
  SplitOptions split;
  uisrnn::TrainConfig train;
  int hidden_units = 200;
  double sigma2_init = 0.5;
  bool per_dim_sigma2 = false;
  std::string out_path = "model.ckpt";
  std::string report_path;
};

uisrnn::TrainResult run_training(const TrainFlags& flags,
                                 const CorpusSplit& corpus) {
  if (corpus.train.empty() || corpus.validation.empty())
    throw uisrnn::Error(uisrnn::ErrCode::validation,
                        "training needs nonempty train and validation sets");
  uisrnn::ModelConfig model_config;
  model_config.embedding_dim = corpus.train.recordings.front().embeddings.dim();
  model_config.hidden_units = flags.hidden_units;
  model_config.head_units = model_config.embedding_dim;
  model_config.sigma2_init = flags.sigma2_init;
  model_config.per_dim_sigma2 = flags.per_dim_sigma2;
  return uisrnn::train(corpus.train, corpus.validation, model_config,
                       flags.train);
}

int cmd_train(const TrainFlags& flags) {
  auto corpus = load_split(flags.split);
  auto result = run_training(flags, corpus);
  uisrnn::save_checkpoint(result.model, result.priors, flags.out_path);
  if (!flags.report_path.empty())
    uisrnn::write_text_file(flags.report_path,
                            uisrnn::train_report_jsonl(result.report));
  ordered_json summary;
  summary["checkpoint"] = flags.out_path;
  summary["iterations"] = result.report.iterations.size();
  summary["validation_der"] = result.report.final_validation_der;
  summary["diverged"] = result.report.diverged;
  std::cout << summary.dump(2) << "\n";
  return result.report.diverged ? 1 : 0;
}

int cmd_sweep_n(const TrainFlags& flags, const std::vector<int>& values,
                int decode_beam, const std::string& out_path) {
  auto corpus = load_split(flags.split);
  ordered_json rows = ordered_json::array();
  for (int n : values) {
    TrainFlags per_n = flags;
    per_n.train.loss_kind = uisrnn::LossKind::sml;
    per_n.train.num_samples = n;
    auto result = run_training(per_n, corpus);
    double der =
        decode_corpus_der(result.model, result.priors, corpus.validation,
                          corpus.validation_refs, decode_beam,
                          flags.train.threads);
    ordered_json row;
    row["n"] = n;
    row["der"] = der;
    row["validation_der_beam2"] = result.report.final_validation_der;
    rows.push_back(row);
    uisrnn::log_info("sweep-n: N=" + std::to_string(n) +
                     " der=" + two_digits(der));
  }
  std::string text = rows.dump(2) + "\n";
  if (!out_path.empty())
    uisrnn::write_text_file(out_path, text);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeFlags {
  std::string model_path;
  std::string input_path;
  std::string out_path = "decoded.labels";
  std::string rttm_path;
  std::string trace_path;
  std::string recording_id = "rec";
  std::string baseline;  // "" or "cumulative-mean"
  int beam_width = 15;
  int max_speakers = 0;
  double sigma2_override = 0.0;
  bool trace = false;
};

int cmd_decode(DecodeFlags flags) {
  auto [model, priors] = uisrnn::load_checkpoint(flags.model_path);
  if (flags.trace && flags.trace_path.empty())
    flags.trace_path = flags.out_path + ".trace.json";
  uisrnn::EmbeddingSequence input;
  uisrnn::DecodeConfig config;
  config.beam_width = flags.beam_width;
  config.max_speakers = flags.max_speakers;
  config.trace = flags.trace || !flags.trace_path.empty();

  uisrnn::DecodeResult result;
  if (flags.baseline.empty()) {
    input = uisrnn::read_embeddings(flags.input_path, model.dim());
    result = uisrnn::beam_decode(input, model, priors, config);
  } else if (flags.baseline == "cumulative-mean") {
    input = uisrnn::read_embeddings(flags.input_path);
    double sigma2 = flags.sigma2_override > 0.0 ? flags.sigma2_override
                                                : model.sigma2.mean();
    result = uisrnn::cumulative_mean_decode(input, priors, config, sigma2);
  } else {
    throw uisrnn::Error(uisrnn::ErrCode::config,
                        "unknown baseline '" + flags.baseline + "'");
  }

  uisrnn::write_labels(result.labels, flags.out_path);
  if (!flags.rttm_path.empty()) {
    auto ref = uisrnn::reference_from_labels(result.labels, input.frame_duration);
    uisrnn::write_text_file(
        flags.rttm_path,
        uisrnn::format_rttm(
            uisrnn::reference_to_segments(ref, flags.recording_id)));
  }
  if (!flags.trace_path.empty()) {
    ordered_json sidecar;
    sidecar["log_joint"] = result.log_joint;
    sidecar["beam_trace"] = result.beam_trace;
    uisrnn::write_text_file(flags.trace_path, sidecar.dump(2) + "\n");
  }
  ordered_json summary;
  summary["labels"] = flags.out_path;
  summary["log_joint"] = result.log_joint;
  summary["num_speakers"] = result.labels.num_speakers();
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const std::string& ref_path, const std::string& hyp_path,
                 bool exclude_overlap, bool per_domain, double frame_duration) {
  std::vector<uisrnn::FrameReference> refs;
  std::vector<uisrnn::LabelSequence> hyps;
  std::vector<std::string> domains;

  if (ref_path.size() > 5 && ref_path.substr(ref_path.size() - 5) == ".json") {
    auto corpus = uisrnn::load_corpus(ref_path);
    for (std::size_t i = 0; i < corpus.dataset.recordings.size(); ++i) {
      const auto& rec = corpus.dataset.recordings[i];
      refs.push_back(corpus.references[i]);
      domains.push_back(rec.domain);
      fs::path hyp_file = fs::path(hyp_path) / (rec.id + ".labels");
      hyps.push_back(uisrnn::read_labels(hyp_file.string()));
    }
  } else {
    auto labels = uisrnn::read_labels(ref_path);
    refs.push_back(uisrnn::reference_from_labels(labels, frame_duration));
    domains.push_back("all");
    hyps.push_back(uisrnn::read_labels(hyp_path));
  }

  std::vector<uisrnn::ScoredRecording> pairs;
  for (std::size_t i = 0; i < refs.size(); ++i)
    pairs.push_back({domains[i], &refs[i], &hyps[i]});
  auto corpus_der = uisrnn::der_corpus(pairs, exclude_overlap);

  ordered_json out = breakdown_json(corpus_der.overall);
  if (per_domain) {
    ordered_json domains_json;
    for (const auto& [domain, breakdown] : corpus_der.per_domain)
      domains_json[domain] = breakdown_json(breakdown);
    out["per_domain"] = domains_json;
  }
  std::cout << out.dump(2) << "\n";
  if (per_domain) {
    std::cout << "\ndomain                       der     missed  falarm  conf\n";
    for (const auto& [domain, b] : corpus_der.per_domain) {
      std::ostringstream row;
      row << std::left << std::setw(28) << domain << std::fixed
          << std::setprecision(4) << b.der() << "  " << b.missed << "  "
          << b.false_alarm << "  " << b.confusion;
      std::cout << row.str() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  install_log_sink();
  CLI::App app{"Online speaker diarization with unbounded interleaved-state "
               "recurrent networks"};
  app.require_subcommand(1);
  app.set_config("--config")->description("TOML config file; flags override it");
  app.allow_config_extras(false);
  app.add_flag("--log-json", g_log_json, "emit logs as JSON lines");

  // simulate ----------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "generate synthetic recordings");
  uisrnn::SynthConfig synth;
  int sim_count = 10;
  std::string sim_out = "data";
  std::string sim_domain = "synthetic";
  simulate->add_option("--out-dir", sim_out, "output directory");
  simulate->add_option("--count", sim_count, "number of recordings");
  simulate->add_option("--speakers", synth.num_speakers, "speaker cap K");
  simulate->add_option("--dim", synth.dim, "embedding dimension");
  simulate->add_option("--mean-scale", synth.mean_scale, "inter-speaker spread");
  simulate->add_option("--sigma", synth.sigma, "within-speaker stddev");
  simulate->add_option("--frames", synth.frames, "frames per recording");
  simulate->add_option("--p0", synth.p0, "speaker change probability");
  simulate->add_option("--alpha", synth.alpha, "new-speaker concentration");
  simulate->add_option("--seed", synth.seed, "random seed");
  simulate->add_option("--overlap-fraction", synth.overlap_fraction,
                       "fraction of two-speaker frames");
  simulate->add_option("--frame-duration", synth.frame_duration,
                       "seconds per frame");
  simulate->add_option("--domain", sim_domain, "domain tag");

  // pca ---------------------------------------------------------------------
  auto* pca = app.add_subcommand("pca", "fit or apply a PCA projection");
  pca->require_subcommand(1);
  auto* pca_fit_cmd = pca->add_subcommand("fit", "fit on a manifest");
  std::string pca_manifest, pca_out = "pca.json";
  int pca_dim = 200;
  pca_fit_cmd->add_option("--manifest", pca_manifest)->required();
  pca_fit_cmd->add_option("--output-dim", pca_dim);
  pca_fit_cmd->add_option("--out", pca_out);
  auto* pca_apply_cmd = pca->add_subcommand("apply", "project one file");
  std::string pca_model, pca_in, pca_apply_out = "projected.uemb";
  pca_apply_cmd->add_option("--pca", pca_model)->required();
  pca_apply_cmd->add_option("--input", pca_in)->required();
  pca_apply_cmd->add_option("--out", pca_apply_out);

  // estimate-priors -----------------------------------------------------------
  auto* priors_cmd = app.add_subcommand("estimate-priors",
                                        "estimate alpha and p0 from labels");
  std::string priors_manifest;
  priors_cmd->add_option("--manifest", priors_manifest)->required();

  // train ---------------------------------------------------------------------
  TrainFlags tf;
  std::string train_loss = "sml";
  auto add_train_options = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", tf.split.manifest)->required();
    cmd->add_option("--val-manifest", tf.split.val_manifest,
                    "explicit validation manifest (otherwise split)");
    cmd->add_option("--split", tf.split.split_ratio, "train fraction");
    cmd->add_option("--num-samples", tf.train.num_samples, "SML sample count N");
    cmd->add_option("--permutations", tf.train.permutations, "copies P per speaker");
    cmd->add_option("--beam-val", tf.train.validation_beam_width,
                    "beam width for validation decodes");
    cmd->add_option("--epochs", tf.train.epochs);
    cmd->add_option("--lr", tf.train.learning_rate);
    cmd->add_option("--batch", tf.train.batch_size);
    cmd->add_option("--l2", tf.train.l2_weight);
    cmd->add_option("--sigma2-prior-a", tf.train.sigma2_prior_a);
    cmd->add_option("--sigma2-prior-b", tf.train.sigma2_prior_b);
    cmd->add_option("--crop", tf.train.crop_length, "max frames per batch item");
    cmd->add_option("--eval-every", tf.train.eval_every);
    cmd->add_option("--seed", tf.train.seed);
    cmd->add_option("--threads", tf.train.threads, "0 = all cores");
    cmd->add_option("--hidden", tf.hidden_units);
    cmd->add_option("--sigma2-init", tf.sigma2_init);
    cmd->add_flag("--per-dim-sigma2", tf.per_dim_sigma2);
  };
  auto* train_cmd = app.add_subcommand("train", "train a speaker model");
  add_train_options(train_cmd);
  train_cmd->add_option("--loss", train_loss, "mse or sml")
      ->check(CLI::IsMember({"mse", "sml"}));
  train_cmd->add_option("--out", tf.out_path, "checkpoint path");
  train_cmd->add_option("--report", tf.report_path, "JSONL training report");

  // sweep-n -------------------------------------------------------------------
  // Only one subcommand runs per invocation, so sweep-n shares the train flag
  // struct.
  auto* sweep_cmd = app.add_subcommand("sweep-n",
                                       "train per SML sample count, report DER");
  std::vector<int> sweep_values{1, 2, 3, 4, 5, 7, 10};
  int sweep_beam = 15;
  std::string sweep_out = "sweep-n.json";
  add_train_options(sweep_cmd);
  sweep_cmd->add_option("--values", sweep_values, "N values to sweep")
      ->delimiter(',');
  sweep_cmd->add_option("--beam", sweep_beam, "beam width for final decode");
  sweep_cmd->add_option("--out", sweep_out, "output JSON path");

  // decode ----------------------------------------------------------------------
  DecodeFlags df;
  auto* decode_cmd = app.add_subcommand("decode", "label a recording online");
  decode_cmd->add_option("--model", df.model_path)->required();
  decode_cmd->add_option("--input", df.input_path)->required();
  decode_cmd->add_option("--beam", df.beam_width);
  decode_cmd->add_option("--out", df.out_path);
  decode_cmd->add_option("--rttm", df.rttm_path, "also write an RTTM file");
  decode_cmd->add_option("--recording-id", df.recording_id);
  decode_cmd->add_option("--baseline", df.baseline,
                         "replace the network (cumulative-mean)");
  decode_cmd->add_option("--sigma2", df.sigma2_override,
                         "variance for the baseline");
  decode_cmd->add_option("--max-speakers", df.max_speakers);
  decode_cmd->add_flag("--trace", df.trace, "record per-frame beam scores");
  decode_cmd->add_option("--trace-out", df.trace_path, "sidecar JSON path");

  // evaluate ---------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "score hypotheses against references");
  std::string eval_ref, eval_hyp;
  bool eval_no_overlap = false, eval_per_domain = false;
  double eval_frame_duration = 1.0;
  eval_cmd->add_option("--ref", eval_ref, "manifest.json or a labels file")
      ->required();
  eval_cmd->add_option("--hyp", eval_hyp, "directory of <id>.labels or a labels file")
      ->required();
  eval_cmd->add_flag("--exclude-overlap", eval_no_overlap);
  eval_cmd->add_flag("--per-domain", eval_per_domain);
  eval_cmd->add_option("--frame-duration", eval_frame_duration);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      ordered_json cfg{{"out_dir", sim_out},
                       {"count", sim_count},
                       {"speakers", synth.num_speakers},
                       {"dim", synth.dim},
                       {"mean_scale", synth.mean_scale},
                       {"sigma", synth.sigma},
                       {"frames", synth.frames},
                       {"p0", synth.p0},
                       {"alpha", synth.alpha},
                       {"seed", synth.seed},
                       {"overlap_fraction", synth.overlap_fraction}};
      log_resolved_config("simulate", cfg);
      return cmd_simulate(synth, sim_count, sim_out, sim_domain);
    }
    if (pca_fit_cmd->parsed()) {
      log_resolved_config("pca fit", {{"manifest", pca_manifest},
                                      {"output_dim", pca_dim},
                                      {"out", pca_out}});
      auto corpus = uisrnn::load_corpus(pca_manifest);
      std::vector<uisrnn::EmbeddingSequence> seqs;
      for (const auto& rec : corpus.dataset.recordings)
        seqs.push_back(rec.embeddings);
      uisrnn::save_pca(uisrnn::pca_fit(seqs, pca_dim), pca_out);
      std::cout << "wrote " << pca_out << "\n";
      return 0;
    }
    if (pca_apply_cmd->parsed()) {
      log_resolved_config("pca apply",
                          {{"pca", pca_model}, {"input", pca_in}, {"out", pca_apply_out}});
      auto proj = uisrnn::load_pca(pca_model);
      auto seq = uisrnn::read_embeddings(pca_in);
      uisrnn::write_embeddings(uisrnn::pca_apply(proj, seq), pca_apply_out);
      std::cout << "wrote " << pca_apply_out << "\n";
      return 0;
    }
    if (priors_cmd->parsed()) {
      log_resolved_config("estimate-priors", {{"manifest", priors_manifest}});
      auto corpus = uisrnn::load_corpus(priors_manifest);
      std::vector<uisrnn::LabelSequence> labels;
      for (const auto& rec : corpus.dataset.recordings)
        labels.push_back(rec.labels);
      ordered_json out;
      out["alpha"] = uisrnn::estimate_alpha(labels);
      out["p0"] = uisrnn::estimate_p0(labels);
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (train_cmd->parsed()) {
      tf.train.loss_kind =
          train_loss == "mse" ? uisrnn::LossKind::mse : uisrnn::LossKind::sml;
      tf.split.seed = tf.train.seed;
      ordered_json cfg{{"manifest", tf.split.manifest},
                       {"val_manifest", tf.split.val_manifest},
                       {"split", tf.split.split_ratio},
                       {"loss", train_loss},
                       {"num_samples", tf.train.num_samples},
                       {"permutations", tf.train.permutations},
                       {"epochs", tf.train.epochs},
                       {"lr", tf.train.learning_rate},
                       {"batch", tf.train.batch_size},
                       {"l2", tf.train.l2_weight},
                       {"hidden", tf.hidden_units},
                       {"sigma2_init", tf.sigma2_init},
                       {"seed", tf.train.seed},
                       {"out", tf.out_path}};
      log_resolved_config("train", cfg);
      return cmd_train(tf);
    }
    if (sweep_cmd->parsed()) {
      tf.train.loss_kind = uisrnn::LossKind::sml;
      tf.split.seed = tf.train.seed;
      ordered_json cfg{{"manifest", tf.split.manifest},
                       {"values", sweep_values},
                       {"beam", sweep_beam},
                       {"seed", tf.train.seed},
                       {"out", sweep_out}};
      log_resolved_config("sweep-n", cfg);
      return cmd_sweep_n(tf, sweep_values, sweep_beam, sweep_out);
    }
    if (decode_cmd->parsed()) {
      ordered_json cfg{{"model", df.model_path},
                       {"input", df.input_path},
                       {"beam", df.beam_width},
                       {"baseline", df.baseline},
                       {"out", df.out_path}};
      log_resolved_config("decode", cfg);
      return cmd_decode(df);
    }
    if (eval_cmd->parsed()) {
      log_resolved_config("evaluate", {{"ref", eval_ref},
                                       {"hyp", eval_hyp},
                                       {"exclude_overlap", eval_no_overlap}});
      return cmd_evaluate(eval_ref, eval_hyp, eval_no_overlap, eval_per_domain,
                          eval_frame_duration);
    }
  } catch (const uisrnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
