#include "oscombine/ensemble_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "oscombine/error_model.hpp"

namespace oscombine {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void fail(const std::string& name, std::size_t line_no, const std::string& what) {
  throw std::invalid_argument(name + ": row " + std::to_string(line_no) + ": " + what);
}

double parse_score(const std::string& tok, const std::string& name, std::size_t line_no) {
  double v;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    fail(name, line_no, "unparseable score '" + tok + "'");
  if (!std::isfinite(v)) fail(name, line_no, "non-finite score '" + tok + "'");
  return v;
}

std::size_t parse_label(const std::string& tok, const std::string& name, std::size_t line_no) {
  std::size_t v;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    fail(name, line_no, "unparseable label '" + tok + "'");
  return v;
}

struct RawRow {
  std::string pattern, classifier;
  std::size_t label;
  std::vector<double> scores;
  std::size_t line_no;
};

double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f%%", 100.0 * fraction);
  return buf;
}

}  // namespace

std::span<const double> ScoreDataset::scores_of(std::size_t pattern, std::size_t classifier) const {
  std::size_t off = (pattern * classifiers() + classifier) * classes;
  return {scores.data() + off, classes};
}

std::size_t ScoreDataset::classifier_index(const std::string& id) const {
  auto it = std::lower_bound(classifier_ids.begin(), classifier_ids.end(), id);
  if (it == classifier_ids.end() || *it != id)
    throw std::invalid_argument("unknown classifier id: " + id);
  return static_cast<std::size_t>(it - classifier_ids.begin());
}

ScoreMatrix ScoreDataset::matrix_for(std::size_t pattern,
                                     std::span<const std::size_t> subset) const {
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(classifiers());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    subset = all;
  }
  std::vector<double> data;
  data.reserve(subset.size() * classes);
  for (std::size_t idx : subset) {
    auto row = scores_of(pattern, idx);
    data.insert(data.end(), row.begin(), row.end());
  }
  return ScoreMatrix(subset.size(), classes, std::move(data));
}

ScoreDataset load_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return load_scores(in, path);
}

ScoreDataset load_scores(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(name + ": empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "pattern_id" || header[1] != "true_label" ||
      header[2] != "classifier_id")
    throw std::invalid_argument(
        name + ": header must be pattern_id,true_label,classifier_id,score_0,...");
  std::size_t classes = header.size() - 3;
  for (std::size_t k = 0; k < classes; ++k)
    if (header[3 + k] != "score_" + std::to_string(k))
      throw std::invalid_argument(name + ": score columns must be score_0..score_" +
                                  std::to_string(classes - 1) + " in order");

  std::vector<RawRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 3 + classes)
      fail(name, line_no,
           "expected " + std::to_string(3 + classes) + " fields, got " + std::to_string(f.size()));
    RawRow r;
    r.pattern = std::move(f[0]);
    r.classifier = std::move(f[2]);
    if (r.pattern.empty() || r.classifier.empty())
      fail(name, line_no, "empty pattern_id or classifier_id");
    r.label = parse_label(f[1], name, line_no);
    if (r.label >= classes)
      fail(name, line_no, "label " + std::to_string(r.label) + " outside 0.." +
                              std::to_string(classes - 1));
    r.scores.reserve(classes);
    for (std::size_t k = 0; k < classes; ++k)
      r.scores.push_back(parse_score(f[3 + k], name, line_no));
    r.line_no = line_no;
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::invalid_argument(name + ": no score rows");

  std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
    return std::tie(a.pattern, a.classifier) < std::tie(b.pattern, b.classifier);
  });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].pattern == rows[i - 1].pattern && rows[i].classifier == rows[i - 1].classifier)
      fail(name, rows[i].line_no,
           "duplicate scores for pattern " + rows[i].pattern + ", classifier " +
               rows[i].classifier);

  ScoreDataset ds;
  ds.classes = classes;
  for (const auto& r : rows) ds.classifier_ids.push_back(r.classifier);
  std::sort(ds.classifier_ids.begin(), ds.classifier_ids.end());
  ds.classifier_ids.erase(std::unique(ds.classifier_ids.begin(), ds.classifier_ids.end()),
                          ds.classifier_ids.end());

  std::size_t n = ds.classifier_ids.size();
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t end = i;
    while (end < rows.size() && rows[end].pattern == rows[i].pattern) ++end;
    for (std::size_t k = i; k < end; ++k) {
      if (rows[k].label != rows[i].label)
        throw std::invalid_argument(name + ": pattern " + rows[i].pattern +
                                    " has conflicting labels");
      std::size_t want = k - i;
      if (want >= n || rows[k].classifier != ds.classifier_ids[want])
        throw std::invalid_argument(name + ": pattern " + rows[i].pattern +
                                    " does not cover every classifier (missing " +
                                    ds.classifier_ids[std::min(want, n - 1)] + ")");
    }
    if (end - i != n)
      throw std::invalid_argument(name + ": pattern " + rows[i].pattern +
                                  " does not cover every classifier (missing " +
                                  ds.classifier_ids[end - i] + ")");
    ds.pattern_ids.push_back(rows[i].pattern);
    ds.true_labels.push_back(rows[i].label);
    for (std::size_t k = i; k < end; ++k)
      ds.scores.insert(ds.scores.end(), rows[k].scores.begin(), rows[k].scores.end());
    i = end;
  }
  return ds;
}

std::string scores_csv(const ScoreDataset& ds) {
  std::string out = "pattern_id,true_label,classifier_id";
  for (std::size_t k = 0; k < ds.classes; ++k) out += ",score_" + std::to_string(k);
  out += '\n';
  char num[40];
  for (std::size_t p = 0; p < ds.patterns(); ++p)
    for (std::size_t m = 0; m < ds.classifiers(); ++m) {
      out += ds.pattern_ids[p];
      out += ',';
      out += std::to_string(ds.true_labels[p]);
      out += ',';
      out += ds.classifier_ids[m];
      for (double v : ds.scores_of(p, m)) {
        std::snprintf(num, sizeof num, ",%.17g", v);
        out += num;
      }
      out += '\n';
    }
  return out;
}

CorrelationReport estimate_correlation(const ScoreDataset& ds) {
  std::size_t n = ds.classifiers(), np = ds.patterns(), nl = ds.classes;
  if (n < 2) throw std::invalid_argument("correlation needs at least 2 classifiers");
  if (np < 3) throw std::invalid_argument("correlation needs at least 3 patterns");

  CorrelationReport rep;
  rep.classifier_ids = ds.classifier_ids;
  rep.classes = nl;
  rep.patterns = np;
  rep.priors.assign(nl, 0.0);
  for (std::size_t lab : ds.true_labels) rep.priors[lab] += 1.0 / static_cast<double>(np);

  std::vector<std::vector<double>> err(n, std::vector<double>(np));
  for (std::size_t c = 0; c < nl; ++c) {
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t p = 0; p < np; ++p)
        err[m][p] = ds.scores_of(p, m)[c] - (ds.true_labels[p] == c ? 1.0 : 0.0);

    std::vector<double> mean(n), ss(n);
    for (std::size_t m = 0; m < n; ++m) {
      mean[m] = mean_of(err[m]);
      for (double e : err[m]) ss[m] += (e - mean[m]) * (e - mean[m]);
      if (ss[m] == 0.0)
        rep.warnings.push_back("classifier " + ds.classifier_ids[m] + " class " +
                               std::to_string(c) +
                               ": zero error variance, correlations undefined");
    }
    std::vector<double> mat(n * n, kNan);
    double sum = 0;
    std::size_t pairs = 0;
    for (std::size_t m = 0; m < n; ++m) {
      if (ss[m] > 0.0) mat[m * n + m] = 1.0;
      for (std::size_t l = m + 1; l < n; ++l) {
        if (ss[m] == 0.0 || ss[l] == 0.0) continue;
        double cov = 0;
        for (std::size_t p = 0; p < np; ++p)
          cov += (err[m][p] - mean[m]) * (err[l][p] - mean[l]);
        double r = std::clamp(cov / std::sqrt(ss[m] * ss[l]), -1.0, 1.0);
        mat[m * n + l] = mat[l * n + m] = r;
        sum += r;
        ++pairs;
      }
    }
    rep.pairwise.push_back(std::move(mat));
    if (pairs == 0) {
      rep.class_delta.push_back(kNan);
      rep.warnings.push_back("class " + std::to_string(c) +
                             ": no classifier pair has a defined correlation");
    } else {
      rep.class_delta.push_back(sum / static_cast<double>(pairs));
    }
  }

  double wsum = 0, dsum = 0;
  bool skipped = false;
  for (std::size_t c = 0; c < nl; ++c) {
    if (std::isnan(rep.class_delta[c])) {
      skipped = true;
      continue;
    }
    wsum += rep.priors[c];
    dsum += rep.priors[c] * rep.class_delta[c];
  }
  if (wsum > 0) {
    rep.overall = dsum / wsum;
    if (skipped)
      rep.warnings.push_back("overall delta renormalized over classes with defined correlations");
  } else {
    rep.overall = kNan;
    rep.warnings.push_back("overall delta undefined: every class lacks defined correlations");
  }
  return rep;
}

EnsembleEvaluation evaluate_ensemble(const ScoreDataset& ds, const CombinerKind& kind,
                                     std::span<const std::string> subset) {
  if (ds.patterns() == 0) throw std::invalid_argument("dataset has no patterns");
  std::vector<std::size_t> idx;
  EnsembleEvaluation ev;
  if (subset.empty()) {
    idx.resize(ds.classifiers());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    ev.classifier_ids = ds.classifier_ids;
  } else {
    for (const auto& id : subset) {
      idx.push_back(ds.classifier_index(id));
      ev.classifier_ids.push_back(id);
    }
  }
  std::size_t ns = idx.size();
  ev.combiner = combiner_name(kind);
  ev.patterns = ds.patterns();
  ev.individual_error.assign(ns, 0.0);

  std::vector<double> col(ns), fused(ds.classes);
  std::size_t combined_wrong = 0;
  std::vector<std::size_t> individual_wrong(ns, 0);
  for (std::size_t p = 0; p < ds.patterns(); ++p) {
    std::size_t label = ds.true_labels[p];
    for (std::size_t c = 0; c < ds.classes; ++c) {
      for (std::size_t k = 0; k < ns; ++k) col[k] = ds.scores_of(p, idx[k])[c];
      fused[c] = fuse_values(col, kind);
    }
    combined_wrong += decide(fused) != label;
    for (std::size_t k = 0; k < ns; ++k)
      individual_wrong[k] += decide(ds.scores_of(p, idx[k])) != label;
  }
  double np = static_cast<double>(ds.patterns());
  ev.combined_error = static_cast<double>(combined_wrong) / np;
  for (std::size_t k = 0; k < ns; ++k)
    ev.individual_error[k] = static_cast<double>(individual_wrong[k]) / np;
  return ev;
}

GroupEvaluation evaluate_groups(std::span<const ScoreDataset> groups, const CombinerKind& kind,
                                std::span<const std::string> subset) {
  if (groups.empty()) throw std::invalid_argument("need at least one run group");
  GroupEvaluation out;
  for (const auto& g : groups) out.groups.push_back(evaluate_ensemble(g, kind, subset));
  double m = 0;
  for (const auto& ev : out.groups) m += ev.combined_error;
  m /= static_cast<double>(out.groups.size());
  double ss = 0;
  for (const auto& ev : out.groups) ss += (ev.combined_error - m) * (ev.combined_error - m);
  out.combined_mean = m;
  out.combined_std = std::sqrt(ss / static_cast<double>(out.groups.size()));
  return out;
}

std::vector<std::string> odd_n_mixed_subset(const ScoreDataset& ds,
                                            std::span<const std::string> family_a,
                                            std::span<const std::string> family_b,
                                            std::size_t n) {
  if (n < 1 || n % 2 == 0) throw std::invalid_argument("replication rule applies to odd n");
  if (family_a.empty() || family_b.empty())
    throw std::invalid_argument("both families need at least one run");

  auto family_error = [&](std::span<const std::string> fam) {
    EnsembleEvaluation ev = evaluate_ensemble(ds, Average{}, fam);
    return mean_of(ev.individual_error);
  };
  double err_a = family_error(family_a);
  double err_b = family_error(family_b);
  auto better = err_a <= err_b ? family_a : family_b;
  auto worse = err_a <= err_b ? family_b : family_a;

  std::size_t need_better = (n + 1) / 2, need_worse = n / 2;
  if (better.size() < need_better || worse.size() < need_worse)
    throw std::invalid_argument("families too small for n = " + std::to_string(n));
  std::vector<std::string> subset;
  subset.insert(subset.end(), better.begin(), better.begin() + need_better);
  subset.insert(subset.end(), worse.begin(), worse.begin() + need_worse);
  return subset;
}

std::string to_json(const CorrelationReport& r) {
  nlohmann::ordered_json j;
  j["classifier_ids"] = r.classifier_ids;
  j["classes"] = r.classes;
  j["patterns"] = r.patterns;
  j["priors"] = r.priors;
  j["class_delta"] = r.class_delta;  // NaN serializes as null
  j["overall_delta"] = r.overall;
  auto& pw = j["pairwise"] = nlohmann::ordered_json::array();
  std::size_t n = r.classifier_ids.size();
  for (const auto& mat : r.pairwise) {
    nlohmann::ordered_json m = nlohmann::ordered_json::array();
    for (std::size_t row = 0; row < n; ++row) {
      nlohmann::ordered_json line = nlohmann::ordered_json::array();
      for (std::size_t c = 0; c < n; ++c) line.push_back(mat[row * n + c]);
      m.push_back(std::move(line));
    }
    pw.push_back(std::move(m));
  }
  j["warnings"] = r.warnings;
  return j.dump(2);
}

std::string to_table(const CorrelationReport& r) {
  std::string out = "classifiers:";
  for (const auto& id : r.classifier_ids) out += " " + id;
  out += "\npatterns: " + std::to_string(r.patterns) + "\n";
  char buf[64];
  std::size_t n = r.classifier_ids.size();
  for (std::size_t c = 0; c < r.classes; ++c) {
    std::snprintf(buf, sizeof buf, "class %zu (prior %.3f): delta ", c, r.priors[c]);
    out += buf;
    if (std::isnan(r.class_delta[c]))
      out += "n/a";
    else {
      std::snprintf(buf, sizeof buf, "%.4f", r.class_delta[c]);
      out += buf;
    }
    out += '\n';
    for (std::size_t row = 0; row < n; ++row) {
      for (std::size_t col = 0; col < n; ++col) {
        double v = r.pairwise[c][row * n + col];
        if (std::isnan(v))
          out += "    n/a";
        else {
          std::snprintf(buf, sizeof buf, " %6.3f", v);
          out += buf;
        }
      }
      out += '\n';
    }
  }
  if (std::isnan(r.overall))
    out += "overall delta: n/a\n";
  else {
    std::snprintf(buf, sizeof buf, "overall delta: %.4f\n", r.overall);
    out += buf;
  }
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  return out;
}

std::string to_json(const GroupEvaluation& g) {
  nlohmann::ordered_json j;
  auto& arr = j["groups"] = nlohmann::ordered_json::array();
  for (const auto& ev : g.groups) {
    nlohmann::ordered_json e;
    e["classifier_ids"] = ev.classifier_ids;
    e["individual_error"] = ev.individual_error;
    e["combined_error"] = ev.combined_error;
    e["patterns"] = ev.patterns;
    e["combiner"] = ev.combiner;
    arr.push_back(std::move(e));
  }
  j["combined_mean"] = g.combined_mean;
  j["combined_std"] = g.combined_std;
  return j.dump(2);
}

std::string to_table(const GroupEvaluation& g) {
  std::string out;
  char buf[128];
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    const auto& ev = g.groups[i];
    std::snprintf(buf, sizeof buf, "group %zu: %zu patterns, combiner %s\n", i + 1, ev.patterns,
                  ev.combiner.c_str());
    out += buf;
    std::size_t width = 10;
    for (const auto& id : ev.classifier_ids) width = std::max(width, id.size());
    for (std::size_t k = 0; k < ev.classifier_ids.size(); ++k) {
      std::snprintf(buf, sizeof buf, "  %-*s %s\n", static_cast<int>(width),
                    ev.classifier_ids[k].c_str(), pct(ev.individual_error[k]).c_str());
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "  %-*s %s\n", static_cast<int>(width), "combined",
                  pct(ev.combined_error).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "combined error: mean %s std %s (%zu group%s)\n",
                pct(g.combined_mean).c_str(), pct(g.combined_std).c_str(), g.groups.size(),
                g.groups.size() == 1 ? "" : "s");
  out += buf;
  return out;
}

}  // namespace oscombine
