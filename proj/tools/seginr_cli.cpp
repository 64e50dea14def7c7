// Command-line front end: dataset generation, training, decoding, probing,
// gradient checks, the 2x2 ablation, and held-out evaluation. Every
// artifact-producing command writes a .manifest.json next to its output so
// runs can be reproduced exactly.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seginr/data.hpp"
#include "seginr/decode.hpp"
#include "seginr/eval.hpp"
#include "seginr/io.hpp"
#include "seginr/net.hpp"
#include "seginr/train.hpp"

namespace {

using nlohmann::json;
using namespace seginr;

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& artifact_path, const std::string& command,
                    const json& config, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, const std::string& started_at) {
  json manifest{
      {"command", command},           {"tool_version", kVersion},
      {"config", config},             {"inputs", inputs},
      {"outputs", outputs},           {"started_at", started_at},
      {"finished_at", timestamp_utc()},
  };
  if (config.contains("seed")) manifest["seed"] = config["seed"];
  const std::string path = artifact_path + ".manifest.json";
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << manifest.dump(2) << '\n';
  if (!f) throw IoError("write failed: '" + path + "'");
}

TokenSequence parse_input_tokens(const std::string& text) {
  TokenSequence tokens;
  std::istringstream in(text);
  std::string field;
  while (in >> field) {
    try {
      tokens.push_back(static_cast<TokenId>(std::stol(field)));
    } catch (const std::exception&) {
      throw Error("bad token id '" + field + "' in --input");
    }
  }
  if (tokens.empty()) throw Error("--input is empty");
  return tokens;
}

// Deterministic example for gradient checking: random tokens, random
// durations below i_pad, random frames.
Example random_example(const ModelConfig& cfg, std::size_t u_count, std::int32_t i_pad,
                       Rng& rng) {
  Example ex;
  ex.tokens.resize(u_count);
  for (TokenId& t : ex.tokens)
    t = static_cast<TokenId>(rng.uniform_int(0, cfg.vocab.input_size - 1));
  for (std::size_t u = 0; u < u_count; ++u) {
    Segment s;
    const auto d = rng.uniform_int(0, i_pad - 1);
    for (std::int64_t i = 0; i < d; ++i)
      s.frames.push_back(static_cast<TokenId>(rng.uniform_int(0, cfg.vocab.output_size - 1)));
    ex.target.segments.push_back(std::move(s));
  }
  return ex;
}

struct GenDataArgs {
  std::string rule = "contextual";
  std::int64_t n = 2000;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  const std::string started = timestamp_utc();
  TaskSpec spec;
  spec.rule = a.rule == "local" ? DurationRule::local : DurationRule::contextual;
  spec.seed = a.seed;
  const std::vector<Example> examples = gen_dataset(spec, static_cast<std::size_t>(a.n));
  serialize_dataset(examples, a.out);
  write_manifest(a.out, "gen-data",
                 json{{"spec", a.rule},
                      {"n", a.n},
                      {"seed", a.seed},
                      {"vocab_in", spec.vocab.input_size},
                      {"vocab_out", spec.vocab.output_size},
                      {"u_min", spec.u_min},
                      {"u_max", spec.u_max}},
                 {}, {a.out}, started);
  std::cout << "wrote " << examples.size() << " examples to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::int32_t i_pad = 20;
  std::int64_t steps = 30000;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  bool padded = true;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  const std::string started = timestamp_utc();
  const std::vector<Example> dataset = parse_dataset_file(a.data);
  const ModelConfig cfg;
  ModelParams model = init_model(cfg, a.seed);
  TrainConfig tc;
  tc.i_pad = a.i_pad;
  tc.lr = a.lr;
  tc.max_steps = a.steps;
  tc.seed = a.seed;
  tc.padded = a.padded;
  const TrainResult result = train(dataset, model, tc);
  save_checkpoint(model, &result.adam, a.out);

  const std::string loss_path = a.out + ".loss.csv";
  {
    std::ofstream f(loss_path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + loss_path + "' for writing");
    f << "step,loss\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
      f << (i + 1) << ',' << format_g17(result.loss_trace[i]) << '\n';
    if (!f) throw IoError("write failed: '" + loss_path + "'");
  }
  write_manifest(a.out, "train",
                 json{{"data", a.data},
                      {"ipad", a.i_pad},
                      {"steps", a.steps},
                      {"lr", a.lr},
                      {"seed", a.seed},
                      {"padded", a.padded},
                      {"batch_size", tc.batch_size},
                      {"embed_dim", cfg.embed_dim},
                      {"hidden", cfg.hidden},
                      {"enc_layers", cfg.enc_layers},
                      {"siren_layers", cfg.siren_layers},
                      {"window", cfg.window},
                      {"w0", cfg.w0}},
                 {a.data}, {a.out, loss_path}, started);
  const double first = result.loss_trace.front(), last = result.loss_trace.back();
  std::cout << "trained " << a.steps << " steps, loss " << format_g17(first) << " -> "
            << format_g17(last) << ", checkpoint " << a.out << "\n";
  return 0;
}

struct DecodeArgs {
  std::string ckpt;
  std::string input;
  std::string mode = "parallel";
  std::string rule = "threshold";
  double tau = 0.5;
  std::int32_t i_max = 20;
};

int cmd_decode(const DecodeArgs& a) {
  const LoadedCheckpoint ck = load_checkpoint(a.ckpt);
  const TokenSequence x = parse_input_tokens(a.input);
  DecodeConfig cfg;
  cfg.mode = a.mode == "streaming" ? DecodeMode::streaming : DecodeMode::parallel;
  cfg.rule = a.rule == "argmax" ? StopRule::argmax : StopRule::threshold;
  cfg.tau = a.tau;
  cfg.i_max = a.i_max;
  const DecodeResult res = decode(x, ck.model, cfg);

  std::cout << "output:";
  for (TokenId t : res.output) std::cout << ' ' << t;
  std::cout << "\ndurations:";
  for (std::int32_t d : res.durations) std::cout << ' ' << d;
  std::cout << "\ntruncated:";
  for (std::uint8_t t : res.truncated) std::cout << ' ' << int(t);
  // The parallel-equivalent wasted-cell count; printed for both modes so the
  // two modes emit identical text.
  std::cout << "\nwasted: " << wasted_cells(res.durations, cfg.i_max) << "\n";
  return 0;
}

struct ProbeArgs {
  std::string ckpt;
  std::string input;
  std::uint64_t u = 0;
  std::int32_t i_pad = 20;
  std::string out;
};

int cmd_probe(const ProbeArgs& a) {
  const std::string started = timestamp_utc();
  const LoadedCheckpoint ck = load_checkpoint(a.ckpt);
  const TokenSequence x = parse_input_tokens(a.input);
  const std::vector<ProbeRecord> records =
      probe_segment(static_cast<std::size_t>(a.u), x, ck.model, a.i_pad);
  if (a.out.empty()) {
    write_probe_csv(std::cout, static_cast<std::size_t>(a.u), records);
  } else {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + a.out + "' for writing");
    write_probe_csv(f, static_cast<std::size_t>(a.u), records);
    if (!f) throw IoError("write failed: '" + a.out + "'");
    write_manifest(a.out, "probe",
                   json{{"ckpt", a.ckpt}, {"input", a.input}, {"u", a.u}, {"ipad", a.i_pad}},
                   {a.ckpt}, {a.out}, started);
  }
  return 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 7;
  bool tiny = false;
  std::int64_t samples = 200;
  double h = 1e-5;
  std::string out;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const std::string started = timestamp_utc();
  ModelConfig cfg;
  std::size_t u_count = 4;
  std::int32_t i_pad = 8;
  if (a.tiny) {
    cfg.embed_dim = 8;
    cfg.hidden = 16;
    u_count = 3;
    i_pad = 4;
  }
  const ModelParams model = init_model(cfg, a.seed);
  Rng rng(a.seed * 977 + 3);
  const Example ex = random_example(cfg, u_count, i_pad, rng);
  const PaddedTargetMatrix targets = build_padded_targets(ex.target, i_pad, cfg.vocab);
  const BackwardResult analytic = backward(ex.tokens, targets, model);
  auto loss_fn = [&](const ParamVector& pv) {
    ModelParams probe = model;
    probe.params = pv;
    return batch_loss(ex.tokens, targets, probe);
  };
  Rng coord_rng(a.seed);
  const double err = grad_check(loss_fn, model.params, analytic.grad, a.h,
                                static_cast<std::size_t>(a.samples), coord_rng);
  const double tol = 1e-4;
  const bool ok = err <= tol;
  std::cout << "max_rel_err=" << format_g17(err) << " tol=" << format_g17(tol) << ' '
            << (ok ? "pass" : "FAIL") << "\n";
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + a.out + "' for writing");
    f << "seed,samples,h,max_rel_err\n"
      << a.seed << ',' << a.samples << ',' << format_g17(a.h) << ',' << format_g17(err) << '\n';
    if (!f) throw IoError("write failed: '" + a.out + "'");
    write_manifest(a.out, "gradcheck",
                   json{{"seed", a.seed}, {"tiny", a.tiny}, {"samples", a.samples}, {"h", a.h}},
                   {}, {a.out}, started);
  }
  return ok ? 0 : 1;
}

struct AblateArgs {
  std::string ckpt_padded;
  std::string ckpt_unpadded;
  std::string data;
  std::int32_t i_max = 20;
  double tau = 0.5;
  std::string out;
};

int cmd_ablate(const AblateArgs& a) {
  const std::string started = timestamp_utc();
  const LoadedCheckpoint padded = load_checkpoint(a.ckpt_padded);
  const LoadedCheckpoint unpadded = load_checkpoint(a.ckpt_unpadded);
  const std::vector<Example> heldout = parse_dataset_file(a.data);
  const AblationReport report =
      run_ablation(heldout, padded.model, unpadded.model, a.i_max, a.tau);
  const std::string csv = ablation_csv(report);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + a.out + "' for writing");
    f << csv;
    if (!f) throw IoError("write failed: '" + a.out + "'");
    write_manifest(a.out, "ablate",
                   json{{"ckpt_padded", a.ckpt_padded},
                        {"ckpt_unpadded", a.ckpt_unpadded},
                        {"data", a.data},
                        {"imax", a.i_max},
                        {"tau", a.tau}},
                   {a.ckpt_padded, a.ckpt_unpadded, a.data}, {a.out}, started);
  }
  return 0;
}

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string rule = "threshold";
  double tau = 0.5;
  std::int32_t i_max = 20;
  std::int32_t i_pad = 20;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  const std::string started = timestamp_utc();
  const LoadedCheckpoint ck = load_checkpoint(a.ckpt);
  const std::vector<Example> heldout = parse_dataset_file(a.data);
  DecodeConfig cfg;
  cfg.mode = DecodeMode::parallel;
  cfg.rule = a.rule == "argmax" ? StopRule::argmax : StopRule::threshold;
  cfg.tau = a.tau;
  cfg.i_max = a.i_max;
  const CellMetrics m = eval_cell(heldout, ck.model, cfg, true);
  const double stability = null_stability_rate(heldout, ck.model, a.i_pad, a.tau);
  std::string csv = "examples,seq_error,dur_acc,wasted_mean,null_stability\n";
  csv += std::to_string(heldout.size()) + ',' + format_g17(m.seq_error) + ',' +
         format_g17(m.dur_acc) + ',' + format_g17(m.wasted_mean) + ',' + format_g17(stability) +
         '\n';
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + a.out + "' for writing");
    f << csv;
    if (!f) throw IoError("write failed: '" + a.out + "'");
    write_manifest(a.out, "eval",
                   json{{"ckpt", a.ckpt},
                        {"data", a.data},
                        {"rule", a.rule},
                        {"tau", a.tau},
                        {"imax", a.i_max},
                        {"ipad", a.i_pad}},
                   {a.ckpt, a.data}, {a.out}, started);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segment-wise implicit neural sequence toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen_cmd->add_option("--spec", gen.rule, "duration rule: local|contextual")
      ->check(CLI::IsMember({"local", "contextual"}));
  gen_cmd->add_option("--n", gen.n, "number of examples")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", gen.out, "output dataset path")->required();

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  train_cmd->add_option("--data", tr.data, "training dataset path")->required();
  train_cmd->add_option("--ipad", tr.i_pad, "padding horizon");
  train_cmd->add_option("--steps", tr.steps, "training steps");
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate");
  train_cmd->add_option("--seed", tr.seed, "init and batch-order seed");
  train_cmd->add_option("--padded", tr.padded, "true: supervise the full ∅-padded grid");
  train_cmd->add_option("--out", tr.out, "checkpoint output path")->required();

  DecodeArgs de;
  CLI::App* decode_cmd = app.add_subcommand("decode", "decode an input sequence");
  decode_cmd->add_option("--ckpt", de.ckpt, "checkpoint path")->required();
  decode_cmd->add_option("--input", de.input, "space-separated input token ids")->required();
  decode_cmd->add_option("--mode", de.mode, "streaming|parallel")
      ->check(CLI::IsMember({"streaming", "parallel"}));
  decode_cmd->add_option("--rule", de.rule, "threshold|argmax")
      ->check(CLI::IsMember({"threshold", "argmax"}));
  decode_cmd->add_option("--tau", de.tau, "∅ probability threshold");
  decode_cmd->add_option("--imax", de.i_max, "per-token duration cap");

  ProbeArgs pr;
  CLI::App* probe_cmd = app.add_subcommand("probe", "per-index probability probe for one segment");
  probe_cmd->add_option("--ckpt", pr.ckpt, "checkpoint path")->required();
  probe_cmd->add_option("--input", pr.input, "space-separated input token ids")->required();
  probe_cmd->add_option("--u", pr.u, "segment position");
  probe_cmd->add_option("--ipad", pr.i_pad, "probe horizon");
  probe_cmd->add_option("--out", pr.out, "CSV output path (default: stdout)");

  GradcheckArgs gc;
  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck_cmd->add_option("--seed", gc.seed, "model and data seed");
  gradcheck_cmd->add_flag("--tiny", gc.tiny, "use the tiny model (D=8, H=16, U=3, i_pad=4)");
  gradcheck_cmd->add_option("--samples", gc.samples, "sampled coordinates");
  gradcheck_cmd->add_option("--fd-step", gc.h, "finite-difference step");
  gradcheck_cmd->add_option("--out", gc.out, "CSV output path");

  AblateArgs ab;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "2x2 padded-training x stop-rule study");
  ablate_cmd->add_option("--ckpt-padded", ab.ckpt_padded, "checkpoint trained with padding")
      ->required();
  ablate_cmd->add_option("--ckpt-unpadded", ab.ckpt_unpadded, "checkpoint trained without padding")
      ->required();
  ablate_cmd->add_option("--data", ab.data, "held-out dataset path")->required();
  ablate_cmd->add_option("--imax", ab.i_max, "per-token duration cap");
  ablate_cmd->add_option("--tau", ab.tau, "∅ probability threshold");
  ablate_cmd->add_option("--out", ab.out, "CSV output path (default: stdout)");

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", ev.ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", ev.data, "dataset path")->required();
  eval_cmd->add_option("--rule", ev.rule, "threshold|argmax")
      ->check(CLI::IsMember({"threshold", "argmax"}));
  eval_cmd->add_option("--tau", ev.tau, "∅ probability threshold");
  eval_cmd->add_option("--imax", ev.i_max, "per-token duration cap");
  eval_cmd->add_option("--ipad", ev.i_pad, "stability probe horizon");
  eval_cmd->add_option("--out", ev.out, "CSV output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen);
    if (train_cmd->parsed()) return cmd_train(tr);
    if (decode_cmd->parsed()) return cmd_decode(de);
    if (probe_cmd->parsed()) return cmd_probe(pr);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gc);
    if (ablate_cmd->parsed()) return cmd_ablate(ab);
    if (eval_cmd->parsed()) return cmd_eval(ev);
  } catch (const seginr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const seginr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
