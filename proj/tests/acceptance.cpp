// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier criteria train real models on the synthetic
// contextual task; everything is seeded, so reruns reproduce the same
// numbers bit for bit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "seginr/data.hpp"
#include "seginr/decode.hpp"
#include "seginr/eval.hpp"
#include "seginr/io.hpp"
#include "seginr/net.hpp"
#include "seginr/train.hpp"

using namespace seginr;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_tick;

void tick() { g_tick = std::chrono::steady_clock::now(); }

void report(int index, const char* name, bool pass, const std::string& detail) {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g_tick).count();
  std::printf("[%s] criterion %d/8 %s: %s (%.1fs)\n", pass ? "PASS" : "FAIL", index, name,
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string g2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

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

ModelParams random_decode_model(Rng& rng) {
  ModelConfig cfg;
  cfg.vocab.input_size = static_cast<TokenId>(rng.uniform_int(4, 16));
  cfg.vocab.output_size = static_cast<TokenId>(rng.uniform_int(3, 32));
  cfg.embed_dim = static_cast<std::int32_t>(rng.uniform_int(4, 12));
  cfg.hidden = static_cast<std::int32_t>(rng.uniform_int(8, 16));
  cfg.enc_layers = static_cast<std::int32_t>(rng.uniform_int(1, 2));
  cfg.siren_layers = static_cast<std::int32_t>(rng.uniform_int(1, 3));
  ModelParams m = init_model(cfg, rng.next_u64());
  const double sharpen = rng.uniform(1.0, 30.0);
  for (double& v : m.params.view(m.layout.head_weight)) v *= sharpen;
  auto bias = m.params.view(m.layout.head_bias);
  bias[bias.size() - 1] += rng.uniform(-3.0, 3.0);
  return m;
}

TokenSequence random_input(const ModelConfig& cfg, Rng& rng) {
  TokenSequence x(static_cast<std::size_t>(rng.uniform_int(1, 7)));
  for (TokenId& t : x) t = static_cast<TokenId>(rng.uniform_int(0, cfg.vocab.input_size - 1));
  return x;
}

// ── criterion 1: gradient correctness ──────────────────────────────────────

void criterion_gradients() {
  tick();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ModelConfig cfg;
    cfg.embed_dim = 8;
    cfg.hidden = 16;
    const ModelParams model = init_model(cfg, seed);
    Rng rng(seed * 977 + 3);
    const Example ex = random_example(cfg, 3, 4, rng);
    const PaddedTargetMatrix targets = build_padded_targets(ex.target, 4, cfg.vocab);
    const BackwardResult analytic = backward(ex.tokens, targets, model);
    auto loss_fn = [&](const ParamVector& pv) {
      ModelParams probe = model;
      probe.params = pv;
      return batch_loss(ex.tokens, targets, probe);
    };
    Rng coord_rng(seed);
    worst = std::max(worst, grad_check(loss_fn, model.params, analytic.grad, 1e-5, 200,
                                       coord_rng));
  }
  report(1, "gradient correctness", worst <= 1e-4,
         "max rel err " + g2(worst) + " over 10 seeds x 200 coords, tol 1e-4");
}

// ── criterion 2: decode-mode equivalence ───────────────────────────────────

void criterion_mode_equivalence() {
  tick();
  Rng rng(20260808);
  const double taus[] = {0.0, 0.3, 0.5, 0.9, 1.1};
  int agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const ModelParams m = random_decode_model(rng);
    const TokenSequence x = random_input(m.cfg, rng);
    DecodeConfig cfg;
    cfg.tau = taus[trial % 5];
    cfg.rule = (trial % 2) ? StopRule::argmax : StopRule::threshold;
    cfg.i_max = static_cast<std::int32_t>(rng.uniform_int(1, 20));
    const DecodeResult s = streaming_decode(x, m, cfg);
    const DecodeResult p = parallel_decode(x, m, cfg);
    if (s.output == p.output && s.durations == p.durations && s.truncated == p.truncated)
      ++agree;
  }
  report(2, "decode-mode equivalence", agree == 200,
         std::to_string(agree) + "/200 random (model, input, config) triples identical");
}

// ── criteria 3-5: trained toy-task checkpoints ─────────────────────────────

struct TrainedPair {
  ModelParams padded;
  ModelParams unpadded;
};

TrainedPair train_pair(const std::vector<Example>& trainset, std::uint64_t seed,
                       std::int64_t steps) {
  TrainedPair pair{init_model(ModelConfig{}, seed), init_model(ModelConfig{}, seed)};
  TrainConfig cfg;
  cfg.max_steps = steps;
  cfg.seed = seed;
  cfg.padded = true;
  train(trainset, pair.padded, cfg);
  cfg.padded = false;
  train(trainset, pair.unpadded, cfg);
  return pair;
}

void criterion_convergence(const std::vector<Example>& heldout, const TrainedPair& converged,
                           std::int64_t steps) {
  tick();
  const DecodeConfig cfg;  // parallel, threshold, tau 0.5, i_max 20
  const CellMetrics m = eval_cell(heldout, converged.padded, cfg, true);
  const bool pass = m.seq_error <= 0.02 && m.dur_acc >= 0.95;
  report(3, "toy-task convergence", pass,
         "seq_error " + g2(m.seq_error) + " (<= 0.02), dur_acc " + g2(m.dur_acc) +
             " (>= 0.95) after " + std::to_string(steps) + " steps");
}

void criterion_ablation_ordering(const std::vector<Example>& heldout,
                                 const TrainedPair& transitional, const TrainedPair& converged,
                                 std::int64_t steps) {
  tick();
  const AblationReport rep = run_ablation(heldout, transitional.padded, transitional.unpadded,
                                          20, 0.5);
  const double pthr = rep.cell(true, StopRule::threshold).seq_error;
  const double pam = rep.cell(true, StopRule::argmax).seq_error;
  const double uthr = rep.cell(false, StopRule::threshold).seq_error;
  const double uam = rep.cell(false, StopRule::argmax).seq_error;
  const bool lowest = pthr < pam && pthr < uthr && pthr < uam;
  const bool highest = uthr > pam && uthr > uam;
  report(4, "ablation ordinal match", lowest && highest,
         "seq_error padded/thr " + g2(pthr) + " < padded/argmax " + g2(pam) +
             ", unpadded/argmax " + g2(uam) + " < unpadded/thr " + g2(uthr) + " at " +
             std::to_string(steps) + " steps");

  // Context, not asserted: at full convergence the deterministic toy task
  // saturates and every cell reaches the same error.
  const AblationReport sat = run_ablation(heldout, converged.padded, converged.unpadded, 20, 0.5);
  std::printf("       (converged pair, report only: padded/thr %s, padded/argmax %s, "
              "unpadded/thr %s, unpadded/argmax %s)\n",
              g2(sat.cell(true, StopRule::threshold).seq_error).c_str(),
              g2(sat.cell(true, StopRule::argmax).seq_error).c_str(),
              g2(sat.cell(false, StopRule::threshold).seq_error).c_str(),
              g2(sat.cell(false, StopRule::argmax).seq_error).c_str());
  std::fflush(stdout);
}

void criterion_null_stability(const std::vector<Example>& heldout, const TrainedPair& converged) {
  tick();
  const double stab_padded = null_stability_rate(heldout, converged.padded, 20, 0.5);
  const double stab_unpadded = null_stability_rate(heldout, converged.unpadded, 20, 0.5);
  const bool pass = stab_padded >= 0.95 && stab_unpadded < stab_padded;
  report(5, "post-boundary null stability", pass,
         "P(null) >= tau across [d_u, i_pad) on " + g2(100.0 * stab_padded) +
             "% of segments padded (>= 95%), " + g2(100.0 * stab_unpadded) + "% unpadded");
}

// ── criterion 6: numerics unit properties ──────────────────────────────────

void criterion_numerics() {
  tick();
  bool pass = true;
  std::string why = "softmax sum/shift, ln(33) cross-entropy, adam fixed point";

  Rng rng(99);
  for (int trial = 0; trial < 100 && pass; ++trial) {
    std::vector<double> logits(33);
    for (double& v : logits) v = rng.uniform(-25.0, 25.0);
    double sum = 0.0;
    for (double v : softmax(logits)) sum += v;
    if (std::abs(sum - 1.0) > 1e-9) {
      pass = false;
      why = "softmax normalization off by " + g2(std::abs(sum - 1.0));
    }
  }
  {  // exact shift invariance on representable shifts
    const std::vector<double> base{0.0, 1.0, -2.0, 5.0};
    std::vector<double> shifted = base;
    for (double& v : shifted) v += 8.0;
    const std::vector<double> a = softmax(base);
    const std::vector<double> b = softmax(shifted);
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k] != b[k]) {
        pass = false;
        why = "softmax shift invariance broke at class " + std::to_string(k);
      }
  }
  {
    const std::vector<double> uniform(33, 1.5);
    const double loss = cross_entropy(uniform, 12).loss;
    if (std::abs(loss - std::log(33.0)) > 1e-12) {
      pass = false;
      why = "uniform 33-class cross-entropy " + g2(loss) + " != ln 33";
    }
  }
  {
    std::vector<double> params{0.75, -2.5};
    const std::vector<double> before = params;
    const std::vector<double> zeros(2, 0.0);
    AdamState state(2, 0.37);
    for (int step = 0; step < 25; ++step) adam_step(params, zeros, state);
    if (params != before) {
      pass = false;
      why = "adam moved parameters under a zero gradient";
    }
  }
  report(6, "numerics unit suite", pass, why);
}

// ── criterion 7: structural round trips ────────────────────────────────────

void criterion_round_trips() {
  tick();
  bool pass = true;
  std::string why = "dataset 1000x, checkpoint bit-exact, concat/split inverse 100x";

  {  // dataset serialize -> parse -> serialize, byte identical
    TaskSpec spec;
    spec.seed = 515;
    const std::vector<Example> examples = gen_dataset(spec, 1000);
    std::ostringstream first;
    serialize_dataset(examples, first);
    std::istringstream in(first.str());
    const std::vector<Example> parsed = parse_dataset(in);
    std::ostringstream second;
    serialize_dataset(parsed, second);
    if (first.str() != second.str() || parsed.size() != 1000) {
      pass = false;
      why = "dataset round trip is not byte-identical";
    }
  }
  if (pass) {  // checkpoint round trip including optimizer state
    ModelConfig cfg;
    cfg.embed_dim = 16;
    cfg.hidden = 32;
    const ModelParams model = init_model(cfg, 2718);
    AdamState adam(model.params.size());
    Rng arng(3);
    for (double& v : adam.m) v = arng.uniform(-1.0, 1.0);
    for (double& v : adam.v) v = arng.uniform(0.0, 1.0);
    adam.t = 99;
    const fs::path p1 = fs::temp_directory_path() / "seginr_acc_ck1.bin";
    const fs::path p2 = fs::temp_directory_path() / "seginr_acc_ck2.bin";
    save_checkpoint(model, &adam, p1.string());
    const LoadedCheckpoint ck = load_checkpoint(p1.string());
    save_checkpoint(ck.model, &*ck.adam, p2.string());
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    if (b1 != b2 || b1.empty()) {
      pass = false;
      why = "checkpoint round trip changed bytes";
    }
    fs::remove(p1);
    fs::remove(p2);
  }
  if (pass) {  // concat/split inverse on random targets
    Rng rng(42);
    const VocabSpec vocab;
    for (int trial = 0; trial < 100 && pass; ++trial) {
      SegmentedTarget t;
      const auto u_count = rng.uniform_int(1, 12);
      for (std::int64_t u = 0; u < u_count; ++u) {
        Segment s;
        const auto d = rng.uniform_int(0, 8);
        for (std::int64_t i = 0; i < d; ++i)
          s.frames.push_back(static_cast<TokenId>(rng.uniform_int(0, vocab.output_size - 1)));
        t.segments.push_back(std::move(s));
      }
      const std::vector<TokenId> flat = concat_segments(t);
      const SegmentedTarget back = split_by_durations(flat, t.durations());
      if (concat_segments(back) != flat ||
          static_cast<std::int64_t>(flat.size()) != t.total_length()) {
        pass = false;
        why = "concat/split inverse failed";
      }
    }
  }
  report(7, "structural round trips", pass, why);
}

// ── criterion 8: wasted-computation accounting ─────────────────────────────

void criterion_wasted() {
  tick();
  Rng rng(31415);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams m = random_decode_model(rng);
    const TokenSequence x = random_input(m.cfg, rng);
    DecodeConfig cfg;
    cfg.tau = (trial % 2) ? 0.5 : 0.3;
    cfg.i_max = static_cast<std::int32_t>(rng.uniform_int(2, 20));
    const DecodeResult r = parallel_decode(x, m, cfg);
    std::int64_t expected = 0;
    for (std::int32_t d : r.durations) expected += cfg.i_max - d;
    if (r.wasted == expected && r.wasted == wasted_cells(r.durations, cfg.i_max)) ++exact;
  }
  report(8, "wasted-computation accounting", exact == 100,
         std::to_string(exact) + "/100 random parallel decodes match sum(i_max - d_u)");
}

}  // namespace

int main() {
  // Training lengths frozen by the pre-build pilot. The transitional pair
  // sits where the threshold/argmax schemes still disagree (criterion 4);
  // the converged pair is where the padded model saturates the toy task
  // (criteria 3 and 5).
  constexpr std::int64_t kConvergedSteps = 1200;
  constexpr std::uint64_t kConvergedSeed = 7;
  constexpr std::int64_t kTransitionalSteps = 400;
  constexpr std::uint64_t kTransitionalSeed = 3;

  criterion_gradients();
  criterion_mode_equivalence();

  TaskSpec task;
  task.seed = 1001;
  const std::vector<Example> trainset = gen_dataset(task, 2000);
  task.seed = 2002;
  const std::vector<Example> heldout = gen_dataset(task, 200);

  std::printf("       training converged pair (%lld steps, seed %llu) and transitional pair "
              "(%lld steps, seed %llu)...\n",
              static_cast<long long>(kConvergedSteps),
              static_cast<unsigned long long>(kConvergedSeed),
              static_cast<long long>(kTransitionalSteps),
              static_cast<unsigned long long>(kTransitionalSeed));
  std::fflush(stdout);
  const TrainedPair converged = train_pair(trainset, kConvergedSeed, kConvergedSteps);
  const TrainedPair transitional = train_pair(trainset, kTransitionalSeed, kTransitionalSteps);

  criterion_convergence(heldout, converged, kConvergedSteps);
  criterion_ablation_ordering(heldout, transitional, converged, kTransitionalSteps);
  criterion_null_stability(heldout, converged);
  criterion_numerics();
  criterion_round_trips();
  criterion_wasted();

  if (g_failures == 0) {
    std::printf("all 8 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criterion(s) failed\n", g_failures);
  return 1;
}
