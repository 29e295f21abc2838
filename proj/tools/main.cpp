#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "oscombine/boundary_sim.hpp"
#include "oscombine/combiners.hpp"
#include "oscombine/ensemble_io.hpp"
#include "oscombine/error_model.hpp"
#include "oscombine/order_stats.hpp"

namespace {

using namespace oscombine;

void write_output(const std::string& text, const std::string& out_path) {
  std::string body = text;
  if (body.empty() || body.back() != '\n') body += '\n';
  if (out_path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + out_path);
  f << body;
  if (!f) throw std::runtime_error("failed writing " + out_path);
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t pos = csv.find(',', start);
    std::string tok = csv.substr(start, pos == std::string::npos ? pos : pos - start);
    if (tok.empty()) throw std::invalid_argument("empty entry in list '" + csv + "'");
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
    out.push_back(v);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> parse_ids(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t pos = csv.find(',', start);
    std::string tok = csv.substr(start, pos == std::string::npos ? pos : pos - start);
    if (tok.empty()) throw std::invalid_argument("empty id in list '" + csv + "'");
    out.push_back(tok);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// "1..50", "15", or "1,2,5,10"
std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  auto range = text.find("..");
  if (range != std::string::npos) {
    std::size_t lo = std::stoull(text.substr(0, range));
    std::size_t hi = std::stoull(text.substr(range + 2));
    if (lo < 1 || hi < lo) throw std::invalid_argument("bad range '" + text + "'");
    for (std::size_t n = lo; n <= hi; ++n) out.push_back(n);
    return out;
  }
  for (double v : parse_doubles(text)) {
    if (v < 1 || v != std::floor(v)) throw std::invalid_argument("bad size in '" + text + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<double> broadcast(std::vector<double> v, std::size_t n, const char* what) {
  if (v.empty() || v.size() == n) return v;
  if (v.size() == 1) return std::vector<double>(n, v[0]);
  throw std::invalid_argument(std::string(what) + " needs 1 or n entries");
}

CombinerKind make_combiner(const std::string& name, std::size_t rank,
                           const std::string& weights) {
  if (!weights.empty()) {
    if (name != "ave" && name != "wavg")
      throw std::invalid_argument("--weights only applies to averaging combiners");
    return make_weighted_average(parse_doubles(weights));
  }
  if (name == "wavg") throw std::invalid_argument("--combiner wavg needs --weights");
  if (name == "ave") return Average{};
  if (name == "min") return OrderStat{RankSpec::min()};
  if (name == "max") return OrderStat{RankSpec::max()};
  if (name == "med") return OrderStat{RankSpec::median()};
  if (name == "rank") {
    if (rank < 1) throw std::invalid_argument("--combiner rank needs --rank >= 1");
    return OrderStat{RankSpec::exact(rank)};
  }
  throw std::invalid_argument("unknown combiner '" + name + "'");
}

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", *v);
  return buf;
}

std::string prediction_table(const ErrorPrediction& p) {
  char buf[96];
  std::string out;
  auto row = [&](const char* k, const std::string& v) {
    std::snprintf(buf, sizeof buf, "%-22s %s\n", k, v.c_str());
    out += buf;
  };
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  row("e_add", num(p.e_add));
  row("e_total", num(p.e_total));
  row("reduction_factor", num(p.reduction_factor));
  row("m1", num(p.moments.m1));
  row("m2", num(p.moments.m2));
  row("tau_sq", opt_str(p.tau_sq));
  row("bound_errcobi", opt_str(p.bound_errcobi));
  if (p.equal_bias_e_add) row("equal_bias_e_add", opt_str(p.equal_bias_e_add));
  if (p.cancelling_bias_e_add) row("cancelling_bias_e_add", opt_str(p.cancelling_bias_e_add));
  return out;
}

double resolve_alpha(const std::string& combiner, std::size_t rank, std::size_t n,
                     const BaseDistribution& dist, std::uint64_t seed) {
  if (combiner == "med" && n % 2 == 0) {
    MomentOptions opt;
    opt.samples = 2'000'000;
    opt.seed = substream_seed(seed, 0x0a17a);
    return median_moments(n, dist, MomentMethod::MonteCarlo, opt).alpha;
  }
  std::size_t r = combiner == "min"   ? 1
                  : combiner == "max" ? n
                  : combiner == "med" ? (n + 1) / 2
                                      : rank;
  return os_moments_quadrature(r, n, dist, 1e-10).alpha;
}

struct CommonFlags {
  std::string out;
  std::string format = "table";
};

void add_format(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--out", f.out, "write the primary output to this file instead of stdout");
  cmd->add_option("--format", f.format, "output format")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "combiners for classifier ensembles: score fusion, added-error predictions, and a\n"
      "Monte Carlo boundary simulator that checks the predictions"};
  app.require_subcommand(1);

  // ---- os-table ----------------------------------------------------------
  struct {
    std::size_t n_max = 15;
    std::string dist = "gaussian";
    std::string method = "quadrature";
    double tol = 1e-6;
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = kDefaultSeed;
    std::string out;
  } ot;
  auto* tab = app.add_subcommand(
      "os-table", "variance ratios of min/max and median order statistics, one row per n");
  tab->add_option("--n-max", ot.n_max, "largest ensemble size")->capture_default_str();
  tab->add_option("--dist", ot.dist, "base distribution")
      ->check(CLI::IsMember({"gaussian", "uniform01"}))
      ->capture_default_str();
  tab->add_option("--method", ot.method, "moment method")
      ->check(CLI::IsMember({"quadrature", "mc"}))
      ->capture_default_str();
  tab->add_option("--tol", ot.tol, "quadrature absolute tolerance")->capture_default_str();
  tab->add_option("--samples", ot.samples, "Monte Carlo samples per entry")
      ->capture_default_str();
  tab->add_option("--seed", ot.seed, "Monte Carlo seed")->capture_default_str();
  tab->add_option("--out", ot.out, "write CSV here instead of stdout");
  tab->callback([&] {
    MomentOptions opt;
    opt.tol = ot.tol;
    opt.samples = ot.samples;
    opt.seed = ot.seed;
    auto rows = alpha_table(ot.n_max, BaseDistribution::parse(ot.dist),
                            parse_method(ot.method), opt);
    if (ot.n_max >= 2)
      std::cerr << "note: even-n median rows average the two central order statistics and are\n"
                   "estimated by Monte Carlo; published tables often list the single rank\n"
                   "n/2+1 statistic instead.\n";
    write_output(alpha_table_csv(rows), ot.out);
  });

  // ---- predict ------------------------------------------------------------
  struct {
    std::string combiner = "ave";
    std::size_t rank = 0;
    std::size_t n = 1;
    double s = 1;
    double sigma_eta = 0.1;
    double delta = 0;
    double bayes = 0;
    std::string dist = "gaussian";
    double alpha = 0;
    std::string bias_i, bias_j;
    double beta_bar = 0, z = 1, sigma2_beta = 0;
    bool has_bias_spec = false;
    std::uint64_t seed = kDefaultSeed;
    CommonFlags io;
  } pr;
  auto* pred = app.add_subcommand("predict", "closed-form added error for a combiner");
  pred->add_option("--combiner", pr.combiner, "single, ave, min, max, med, or rank")
      ->check(CLI::IsMember({"single", "ave", "min", "max", "med", "rank"}))
      ->capture_default_str();
  pred->add_option("--rank", pr.rank, "1-based rank for --combiner rank");
  pred->add_option("--n", pr.n, "ensemble size")->capture_default_str();
  pred->add_option("--s", pr.s, "slope difference at the boundary")->capture_default_str();
  pred->add_option("--sigma-eta", pr.sigma_eta, "per-classifier noise std dev")
      ->capture_default_str();
  pred->add_option("--delta", pr.delta, "error correlation")->capture_default_str();
  pred->add_option("--bayes-error", pr.bayes, "error floor added to e_add")
      ->capture_default_str();
  pred->add_option("--dist", pr.dist, "noise base distribution (for order statistic alpha)")
      ->check(CLI::IsMember({"gaussian", "uniform01"}))
      ->capture_default_str();
  pred->add_option("--alpha", pr.alpha, "override the order statistic variance ratio");
  pred->add_option("--bias-i", pr.bias_i, "per-classifier biases toward class i (list or one)");
  pred->add_option("--bias-j", pr.bias_j, "per-classifier biases toward class j (list or one)");
  auto* bb = pred->add_option("--beta-bar", pr.beta_bar, "combined boundary bias");
  auto* bz = pred->add_option("--z", pr.z, "single-to-combined bias ratio, >= 1");
  auto* bs = pred->add_option("--sigma2-beta", pr.sigma2_beta, "variance of classifier biases");
  pred->add_option("--seed", pr.seed, "seed for Monte Carlo alpha (even-n median)")
      ->capture_default_str();
  add_format(pred, pr.io);
  pred->callback([&] {
    pr.has_bias_spec = bb->count() || bz->count() || bs->count();
    BoundaryScenario scn;
    scn.s = pr.s;
    scn.sigma_eta = pr.sigma_eta;
    scn.n = pr.combiner == "single" ? 1 : pr.n;
    scn.delta = pr.delta;
    scn.bayes_error = pr.bayes;
    if (!pr.bias_i.empty()) scn.biases_i = broadcast(parse_doubles(pr.bias_i), scn.n, "--bias-i");
    if (!pr.bias_j.empty()) scn.biases_j = broadcast(parse_doubles(pr.bias_j), scn.n, "--bias-j");
    std::optional<BiasSpec> bias;
    if (pr.has_bias_spec) bias = BiasSpec{pr.beta_bar, pr.z, pr.sigma2_beta};

    ErrorPrediction p;
    if (pr.combiner == "single") {
      p = predict_single(scn);
    } else if (pr.combiner == "ave") {
      p = predict_average(scn, bias);
    } else {
      double alpha = pr.alpha > 0 ? pr.alpha
                                  : resolve_alpha(pr.combiner, pr.rank, scn.n,
                                                  BaseDistribution::parse(pr.dist), pr.seed);
      p = predict_os(scn, alpha, bias);
    }
    write_output(pr.io.format == "json" ? to_json(p) : prediction_table(p), pr.io.out);
  });

  // ---- simulate -----------------------------------------------------------
  struct {
    std::string model = "linear";
    double s = 1;
    double x_star = 0;
    double sigma_eta = 0.1;
    double delta = 0;
    std::size_t n = 1;
    std::string combiner = "ave";
    std::size_t rank = 0;
    std::string weights;
    std::string dist = "gaussian";
    std::string bias_i, bias_j;
    std::size_t trials = 100'000;
    std::uint64_t seed = kDefaultSeed;
    std::string offsets_out;
    CommonFlags io;
  } sm;
  auto* sim = app.add_subcommand(
      "simulate", "Monte Carlo boundary offsets for a combiner, compared against theory");
  sim->add_option("--model", sm.model, "boundary model")
      ->check(CLI::IsMember({"linear", "tanh"}))
      ->capture_default_str();
  sim->add_option("--s", sm.s, "slope difference at the boundary")->capture_default_str();
  sim->add_option("--x-star", sm.x_star, "noise-free boundary location (tanh model)")
      ->capture_default_str();
  sim->add_option("--sigma-eta", sm.sigma_eta, "per-classifier noise std dev")
      ->capture_default_str();
  sim->add_option("--delta", sm.delta, "equicorrelation of errors within a class")
      ->capture_default_str();
  sim->add_option("--n", sm.n, "ensemble size")->capture_default_str();
  sim->add_option("--combiner", sm.combiner, "ave, wavg, min, max, med, or rank")
      ->check(CLI::IsMember({"ave", "wavg", "min", "max", "med", "rank"}))
      ->capture_default_str();
  sim->add_option("--rank", sm.rank, "1-based rank for --combiner rank");
  sim->add_option("--weights", sm.weights, "weights for --combiner wavg");
  sim->add_option("--dist", sm.dist, "noise base distribution")
      ->check(CLI::IsMember({"gaussian", "uniform01"}))
      ->capture_default_str();
  sim->add_option("--bias-i", sm.bias_i, "per-classifier biases toward class i (list or one)");
  sim->add_option("--bias-j", sm.bias_j, "per-classifier biases toward class j (list or one)");
  sim->add_option("--trials", sm.trials, "Monte Carlo trials")->capture_default_str();
  sim->add_option("--seed", sm.seed, "trial substream seed")->capture_default_str();
  sim->add_option("--offsets-out", sm.offsets_out, "also write the raw offsets as CSV");
  add_format(sim, sm.io);
  sim->callback([&] {
    PosteriorModel model;
    if (sm.model == "linear") {
      model = LocalLinearModel{sm.s};
    } else {
      double s = sm.s, x0 = sm.x_star;
      TwoClassExplicitModel em;
      em.p_j = [s, x0](double x) { return 0.5 * (1.0 + std::tanh(s * (x - x0))); };
      em.p_i = [s, x0](double x) { return 0.5 * (1.0 - std::tanh(s * (x - x0))); };
      em.x_star = x0;
      em.s_hint = s;
      model = std::move(em);
    }
    NoiseSpec noise;
    noise.sigma_eta = sm.sigma_eta;
    noise.dist = BaseDistribution::parse(sm.dist);
    noise.delta = sm.delta;
    noise.n = sm.n;
    if (!sm.bias_i.empty()) noise.biases_i = broadcast(parse_doubles(sm.bias_i), sm.n, "--bias-i");
    if (!sm.bias_j.empty()) noise.biases_j = broadcast(parse_doubles(sm.bias_j), sm.n, "--bias-j");
    CombinerKind kind = make_combiner(sm.combiner, sm.rank, sm.weights);
    if (!sm.offsets_out.empty()) {
      OffsetSamples samples = simulate_offsets(model, noise, kind, sm.trials, sm.seed);
      write_output(offsets_csv(samples), sm.offsets_out);
      if (samples.reject_warning)
        std::cerr << "warning: " << samples.rejected << " of " << samples.trials_requested
                  << " trials found no boundary inside the search window\n";
    }
    ErrorReport r = compare_to_theory(model, noise, kind, sm.trials, sm.seed);
    write_output(sm.io.format == "json" ? to_json(r) : to_table(r), sm.io.out);
  });

  // ---- reduction-curve ----------------------------------------------------
  struct {
    std::string ns = "1..15";
    std::string deltas = "0,0.1,0.2,0.3,0.5,0.7,1";
    std::string out;
  } rc;
  auto* red = app.add_subcommand("reduction-curve",
                                 "added-error reduction factor (1 + delta(n-1))/n as CSV");
  red->add_option("--n", rc.ns, "sizes: '1..50', a single value, or a comma list")
      ->capture_default_str();
  red->add_option("--deltas", rc.deltas, "comma list of correlations")->capture_default_str();
  red->add_option("--out", rc.out, "write CSV here instead of stdout");
  red->callback([&] {
    auto ns = parse_sizes(rc.ns);
    auto ds = parse_doubles(rc.deltas);
    write_output(reduction_curve_csv(reduction_curve(ns, ds)), rc.out);
  });

  // ---- combine -------------------------------------------------------------
  struct {
    std::vector<std::string> scores;
    std::string combiner = "ave";
    std::size_t rank = 0;
    std::string weights;
    std::string subset;
    std::string mix_a, mix_b;
    std::size_t n = 0;
    CommonFlags io;
  } cb;
  auto* comb = app.add_subcommand("combine", "fuse score files and report error rates");
  comb->add_option("--scores", cb.scores, "score CSV files; each file is one run group")
      ->required()
      ->expected(-1);
  comb->add_option("--combiner", cb.combiner, "ave, wavg, min, max, med, or rank")
      ->check(CLI::IsMember({"ave", "wavg", "min", "max", "med", "rank"}))
      ->capture_default_str();
  comb->add_option("--rank", cb.rank, "1-based rank for --combiner rank");
  comb->add_option("--weights", cb.weights, "weights for --combiner wavg");
  comb->add_option("--subset", cb.subset, "comma list of classifier ids (repeats allowed)");
  comb->add_option("--mix-a", cb.mix_a, "first family of runs for odd-n mixing");
  comb->add_option("--mix-b", cb.mix_b, "second family of runs for odd-n mixing");
  comb->add_option("--n", cb.n, "ensemble size for odd-n mixing");
  add_format(comb, cb.io);
  comb->callback([&] {
    std::vector<ScoreDataset> groups;
    for (const auto& path : cb.scores) groups.push_back(load_scores(path));
    std::vector<std::string> subset;
    if (!cb.mix_a.empty() || !cb.mix_b.empty()) {
      if (cb.mix_a.empty() || cb.mix_b.empty() || cb.n == 0)
        throw std::invalid_argument("odd-n mixing needs --mix-a, --mix-b, and --n");
      subset = odd_n_mixed_subset(groups.front(), parse_ids(cb.mix_a), parse_ids(cb.mix_b),
                                  cb.n);
    } else if (!cb.subset.empty()) {
      subset = parse_ids(cb.subset);
    }
    CombinerKind kind = make_combiner(cb.combiner, cb.rank, cb.weights);
    GroupEvaluation ev = evaluate_groups(groups, kind, subset);
    write_output(cb.io.format == "json" ? to_json(ev) : to_table(ev), cb.io.out);
  });

  // ---- correlate -----------------------------------------------------------
  struct {
    std::string scores;
    CommonFlags io;
  } co;
  auto* corr = app.add_subcommand("correlate",
                                  "pairwise error correlations between classifiers");
  corr->add_option("--scores", co.scores, "score CSV file")->required();
  add_format(corr, co.io);
  corr->callback([&] {
    CorrelationReport rep = estimate_correlation(load_scores(co.scores));
    write_output(co.io.format == "json" ? to_json(rep) : to_table(rep), co.io.out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
