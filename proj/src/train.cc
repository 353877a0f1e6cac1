// src/train.cc

#include "hohmm/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hohmm/errors.h"
#include "hohmm/inference.h"
#include "hohmm/logmath.h"

namespace hohmm {

namespace {

constexpr double kOccEps = 1e-10;

int pow_int(int base, int exp) {
  int v = 1;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

// Uniform double in [0, 1) from the top 53 bits; keeps results independent
// of library distribution internals.
double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// --- k-means -----------------------------------------------------------------

struct KMeans {
  std::vector<std::vector<double>> centers;  // k x dim
  std::vector<int> assignment;               // per point
  std::vector<int> counts;                   // per cluster
};

double sq_dist(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return acc;
}

KMeans run_kmeans(const std::vector<double>& points, int dim, int k,
                  std::mt19937_64& rng) {
  const int count = static_cast<int>(points.size()) / dim;
  KMeans km;
  km.centers.resize(k);
  km.assignment.assign(count, 0);
  km.counts.assign(k, 0);

  auto point = [&](int i) { return points.data() + static_cast<size_t>(i) * dim; };

  // k-means++ seeding.
  std::vector<double> d2(count, std::numeric_limits<double>::max());
  {
    const int first = static_cast<int>(rng() % static_cast<std::uint64_t>(count));
    km.centers[0].assign(point(first), point(first) + dim);
  }
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
      d2[i] = std::min(d2[i], sq_dist(point(i), km.centers[j - 1].data(), dim));
      total += d2[i];
    }
    int pick = (j - 1) % count;  // fallback when all points coincide
    if (total > 0.0) {
      double target = unit_double(rng) * total;
      for (int i = 0; i < count; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    km.centers[j].assign(point(pick), point(pick) + dim);
  }

  std::vector<double> sums(static_cast<size_t>(k) * dim);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(km.counts.begin(), km.counts.end(), 0);
    for (int i = 0; i < count; ++i) {
      int best = 0;
      double best_d = sq_dist(point(i), km.centers[0].data(), dim);
      for (int j = 1; j < k; ++j) {
        const double d = sq_dist(point(i), km.centers[j].data(), dim);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (km.assignment[i] != best) {
        km.assignment[i] = best;
        changed = true;
      }
      ++km.counts[best];
      for (int d = 0; d < dim; ++d) sums[static_cast<size_t>(best) * dim + d] += point(i)[d];
    }
    for (int j = 0; j < k; ++j) {
      if (km.counts[j] == 0) continue;  // empty cluster keeps its center
      for (int d = 0; d < dim; ++d)
        km.centers[j][d] = sums[static_cast<size_t>(j) * dim + d] / km.counts[j];
    }
    if (!changed && iter > 0) break;
  }
  return km;
}

// --- M-step helpers ------------------------------------------------------------

// Normalized counts with support preserved from prev (structural zeros stay
// zero) and nonzero entries floored. Returns false when the row saw no data.
bool row_from_counts(std::span<const double> counts, std::span<const double> prev,
                     double floor, std::span<double> out) {
  const int n = static_cast<int>(counts.size());
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    if (prev[i] > 0.0) sum += counts[i];
  if (sum <= kOccEps) return false;
  double renorm = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = prev[i] > 0.0 ? std::max(counts[i] / sum, floor) : 0.0;
    renorm += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= renorm;
  return true;
}

HmmModel reestimate(const HmmModel& prev, const SuffStats& stats,
                    const TrainConfig& config, int iteration,
                    std::vector<std::string>* notes) {
  const int n = prev.num_states;
  HmmModel next = prev;

  if (!row_from_counts(stats.initial_counts, prev.initial, config.transition_floor,
                       next.initial) &&
      notes) {
    notes->push_back("iter " + std::to_string(iteration) + ": initial distribution frozen");
  }

  for (int level = 1; level <= prev.order; ++level) {
    const auto& counts = stats.trans_counts[level - 1];
    const auto& prev_table = prev.transition_level(level);
    auto& next_table = next.transition_level(level);
    const int rows = prev.num_contexts(level);
    int frozen = 0;
    for (int row = 0; row < rows; ++row) {
      const size_t off = static_cast<size_t>(row) * n;
      if (!row_from_counts({counts.data() + off, static_cast<size_t>(n)},
                           {prev_table.data() + off, static_cast<size_t>(n)},
                           config.transition_floor,
                           {next_table.data() + off, static_cast<size_t>(n)}))
        ++frozen;
    }
    if (frozen > 0 && notes)
      notes->push_back("iter " + std::to_string(iteration) + ": " + std::to_string(frozen) +
                       " level-" + std::to_string(level) + " rows frozen (no occupancy)");
  }

  const int m_count = prev.num_mixtures();
  const int dim = prev.feature_dim();
  for (int s = 0; s < n; ++s) {
    if (stats.state_occ[s] <= kOccEps) {
      if (notes)
        notes->push_back("iter " + std::to_string(iteration) + ": state " +
                         std::to_string(s) + " had zero occupancy; emissions frozen");
      continue;
    }
    GaussianMixture& gmm = next.emissions[s];
    double wsum = 0.0;
    for (int m = 0; m < m_count; ++m) wsum += stats.comp_occ[static_cast<size_t>(s) * m_count + m];
    for (int m = 0; m < m_count; ++m) {
      const double occ = stats.comp_occ[static_cast<size_t>(s) * m_count + m];
      gmm.weights[m] = occ / wsum;
      if (occ <= kOccEps) continue;  // dead component keeps old shape
      const size_t off = (static_cast<size_t>(s) * m_count + m) * dim;
      for (int d = 0; d < dim; ++d) {
        const double mean = stats.comp_sum[off + d] / occ;
        const double var = stats.comp_sumsq[off + d] / occ - mean * mean;
        gmm.means[m][d] = mean;
        gmm.variances[m][d] = std::max(var, config.variance_floor);
      }
    }
  }
  return next;
}

}  // namespace

void TrainConfig::validate() const {
  if (order < 1 || order > 3) throw DataError("TrainConfig: order must be 1, 2, or 3");
  if (num_states < 1) throw DataError("TrainConfig: num_states must be >= 1");
  if (num_mixtures < 1) throw DataError("TrainConfig: num_mixtures must be >= 1");
  if (max_iterations < 1) throw DataError("TrainConfig: max_iterations must be >= 1");
  if (!(transition_floor > 0.0)) throw DataError("TrainConfig: transition_floor must be > 0");
  if (!(variance_floor > 0.0)) throw DataError("TrainConfig: variance_floor must be > 0");
}

SuffStats SuffStats::zeros(const HmmModel& model) {
  SuffStats s;
  s.order = model.order;
  s.num_states = model.num_states;
  s.num_mixtures = model.num_mixtures();
  s.dim = model.feature_dim();
  s.initial_counts.assign(model.num_states, 0.0);
  for (int level = 1; level <= model.order; ++level)
    s.trans_counts[level - 1].assign(
        static_cast<size_t>(model.num_contexts(level)) * model.num_states, 0.0);
  s.state_occ.assign(model.num_states, 0.0);
  s.comp_occ.assign(static_cast<size_t>(model.num_states) * s.num_mixtures, 0.0);
  s.comp_sum.assign(s.comp_occ.size() * s.dim, 0.0);
  s.comp_sumsq.assign(s.comp_occ.size() * s.dim, 0.0);
  return s;
}

void SuffStats::merge(const SuffStats& other) {
  if (order != other.order || num_states != other.num_states ||
      num_mixtures != other.num_mixtures || dim != other.dim)
    throw DataError("SuffStats: merging incompatible accumulators");
  auto add = [](std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  add(initial_counts, other.initial_counts);
  for (int l = 0; l < order; ++l) add(trans_counts[l], other.trans_counts[l]);
  add(state_occ, other.state_occ);
  add(comp_occ, other.comp_occ);
  add(comp_sum, other.comp_sum);
  add(comp_sumsq, other.comp_sumsq);
  log_likelihood += other.log_likelihood;
  frames += other.frames;
}

SuffStats accumulate_stats(const HmmModel& model, const FeatureSequence& obs) {
  const int n = model.num_states;
  const int r = model.order;
  const int t_count = obs.num_frames();
  const int m_count = model.num_mixtures();
  const int dim = model.feature_dim();

  SuffStats stats = SuffStats::zeros(model);
  stats.frames = t_count;
  const std::vector<double> logb = emission_log_densities(model, obs);

  // Per-frame emission statistics given the state occupancy at that frame.
  auto accumulate_frame = [&](int t, int s, double occ) {
    stats.state_occ[s] += occ;
    const auto x = obs.frame(t);
    for (int m = 0; m < m_count; ++m) {
      double resp;
      if (m_count == 1) {
        resp = occ;
      } else if (model.emissions[s].weights[m] > 0.0) {
        resp = occ * std::exp(std::log(model.emissions[s].weights[m]) +
                              model.emissions[s].component_log_density(m, x) -
                              logb[static_cast<size_t>(t) * n + s]);
      } else {
        continue;
      }
      const size_t sm = static_cast<size_t>(s) * m_count + m;
      stats.comp_occ[sm] += resp;
      const size_t off = sm * dim;
      for (int d = 0; d < dim; ++d) {
        stats.comp_sum[off + d] += resp * x[d];
        stats.comp_sumsq[off + d] += resp * x[d] * x[d];
      }
    }
  };

  if (t_count < r) {
    // Too short for the full-order lattice: exact posterior by enumerating
    // the N^T paths.
    const int num_paths = pow_int(n, t_count);
    std::vector<double> joint(num_paths);
    std::vector<int> path(t_count);
    auto decode = [&](int code) {
      for (int t = t_count - 1; t >= 0; --t) {
        path[t] = code % n;
        code /= n;
      }
    };
    for (int p = 0; p < num_paths; ++p) {
      decode(p);
      double lp = model.initial[path[0]] > 0.0 ? std::log(model.initial[path[0]]) : kLogZero;
      lp += logb[path[0]];
      int ctx = path[0];
      for (int t = 1; t < t_count; ++t) {
        const double a = model.transition_level(t)[static_cast<size_t>(ctx) * n + path[t]];
        lp += (a > 0.0 ? std::log(a) : kLogZero) + logb[static_cast<size_t>(t) * n + path[t]];
        ctx = ctx * n + path[t];
      }
      joint[p] = lp;
    }
    const double total = log_sum_exp(joint);
    if (!std::isfinite(total))
      throw NumericError("accumulate_stats: observation impossible under the model");
    stats.log_likelihood = total;
    for (int p = 0; p < num_paths; ++p) {
      const double w = std::exp(joint[p] - total);
      if (w <= 0.0) continue;
      decode(p);
      stats.initial_counts[path[0]] += w;
      int ctx = path[0];
      for (int t = 1; t < t_count; ++t) {
        stats.trans_counts[t - 1][static_cast<size_t>(ctx) * n + path[t]] += w;
        ctx = ctx * n + path[t];
      }
      for (int t = 0; t < t_count; ++t) accumulate_frame(t, path[t], w);
    }
    return stats;
  }

  const ForwardResult fwd = forward(model, obs);
  const Trellis bwd = backward(model, obs);
  const double total = fwd.log_likelihood;
  if (!std::isfinite(total))
    throw NumericError("accumulate_stats: observation impossible under the model");
  stats.log_likelihood = total;

  // Tuple-state occupancies. The ramp lattices carry the whole prefix, so
  // gamma at frames 0..r-1 directly re-estimates the ramp tables.
  std::vector<double> frame_occ(n);
  for (int t = 0; t < t_count; ++t) {
    const auto& av = fwd.trellis.log_values[t];
    const auto& bv = bwd.log_values[t];
    std::fill(frame_occ.begin(), frame_occ.end(), 0.0);
    for (size_t c = 0; c < av.size(); ++c) {
      const double g = std::exp(av[c] + bv[c] - total);
      if (g <= 0.0) continue;
      frame_occ[c % n] += g;
      if (t == 0) stats.initial_counts[c] += g;
      if (t >= 1 && t < r) stats.trans_counts[t - 1][c] += g;
    }
    for (int s = 0; s < n; ++s)
      if (frame_occ[s] > 0.0) accumulate_frame(t, s, frame_occ[s]);
  }

  // Full-order transition counts.
  const std::vector<double> log_top = log_table(model.transition_level(r));
  const int heads = pow_int(n, r - 1);
  for (int t = r - 1; t + 1 < t_count; ++t) {
    const auto& av = fwd.trellis.log_values[t];
    const auto& bv_next = bwd.log_values[t + 1];
    auto& counts = stats.trans_counts[r - 1];
    for (size_t c = 0; c < av.size(); ++c) {
      if (av[c] == kLogZero) continue;
      const int head = static_cast<int>(c) % heads;
      for (int x = 0; x < n; ++x) {
        const double lx = av[c] + log_top[c * n + x] +
                          logb[static_cast<size_t>(t + 1) * n + x] + bv_next[head * n + x];
        const double xi = std::exp(lx - total);
        if (xi > 0.0) counts[c * n + x] += xi;
      }
    }
  }
  return stats;
}

HmmModel init_model(const TrainConfig& config, const std::vector<FeatureSequence>& data) {
  config.validate();
  if (data.empty()) throw DataError("init_model: no training sequences");
  const int dim = data[0].dim;
  std::int64_t frame_count = 0;
  for (const auto& seq : data) {
    seq.validate();
    if (seq.dim != dim) throw DataError("init_model: sequences differ in dimension");
    frame_count += seq.num_frames();
  }

  const int n = config.num_states;
  const int m_count = config.num_mixtures;

  HmmModel model;
  model.order = config.order;
  model.num_states = n;

  if (config.topology == Topology::kErgodic) {
    model.initial.assign(n, 1.0 / n);
    for (int level = 1; level <= config.order; ++level)
      model.transition_level(level)
          .assign(static_cast<size_t>(model.num_contexts(level)) * n, 1.0 / n);
  } else {
    model.initial.assign(n, 0.0);
    model.initial[0] = 1.0;
    for (int level = 1; level <= config.order; ++level) {
      auto& table = model.transition_level(level);
      const int rows = model.num_contexts(level);
      table.assign(static_cast<size_t>(rows) * n, 0.0);
      for (int row = 0; row < rows; ++row) {
        const int last = row % n;
        if (last == n - 1) {
          table[static_cast<size_t>(row) * n + last] = 1.0;
        } else {
          table[static_cast<size_t>(row) * n + last] = 0.5;
          table[static_cast<size_t>(row) * n + last + 1] = 0.5;
        }
      }
    }
  }

  // Pool every frame and cluster into N*M groups; states take M clusters
  // each in centroid-norm order.
  std::vector<double> pool;
  pool.reserve(static_cast<size_t>(frame_count) * dim);
  for (const auto& seq : data)
    pool.insert(pool.end(), seq.data.begin(), seq.data.end());
  const int points = static_cast<int>(frame_count);

  std::mt19937_64 rng(config.seed);
  const int k = n * m_count;
  KMeans km = run_kmeans(pool, dim, k, rng);

  std::vector<double> global_var(dim, 0.0);
  {
    std::vector<double> mean(dim, 0.0);
    for (int i = 0; i < points; ++i)
      for (int d = 0; d < dim; ++d) mean[d] += pool[static_cast<size_t>(i) * dim + d];
    for (int d = 0; d < dim; ++d) mean[d] /= points;
    for (int i = 0; i < points; ++i)
      for (int d = 0; d < dim; ++d) {
        const double diff = pool[static_cast<size_t>(i) * dim + d] - mean[d];
        global_var[d] += diff * diff;
      }
    for (int d = 0; d < dim; ++d)
      global_var[d] = std::max(global_var[d] / points, config.variance_floor);
  }

  std::vector<int> cluster_order(k);
  std::iota(cluster_order.begin(), cluster_order.end(), 0);
  std::sort(cluster_order.begin(), cluster_order.end(), [&](int a, int b) {
    double na = 0.0, nb = 0.0;
    for (int d = 0; d < dim; ++d) {
      na += km.centers[a][d] * km.centers[a][d];
      nb += km.centers[b][d] * km.centers[b][d];
    }
    if (na != nb) return na < nb;
    if (km.centers[a] != km.centers[b]) return km.centers[a] < km.centers[b];
    return a < b;
  });

  std::vector<double> scatter(static_cast<size_t>(k) * dim, 0.0);
  for (int i = 0; i < points; ++i) {
    const int j = km.assignment[i];
    for (int d = 0; d < dim; ++d) {
      const double diff = pool[static_cast<size_t>(i) * dim + d] - km.centers[j][d];
      scatter[static_cast<size_t>(j) * dim + d] += diff * diff;
    }
  }

  model.emissions.resize(n);
  for (int s = 0; s < n; ++s) {
    GaussianMixture& gmm = model.emissions[s];
    gmm.weights.resize(m_count);
    gmm.means.resize(m_count);
    gmm.variances.resize(m_count);
    int state_points = 0;
    for (int m = 0; m < m_count; ++m)
      state_points += km.counts[cluster_order[s * m_count + m]];
    for (int m = 0; m < m_count; ++m) {
      const int j = cluster_order[s * m_count + m];
      gmm.weights[m] = state_points > 0 ? static_cast<double>(km.counts[j]) / state_points
                                        : 1.0 / m_count;
      gmm.means[m] = km.centers[j];
      gmm.variances[m].resize(dim);
      for (int d = 0; d < dim; ++d) {
        gmm.variances[m][d] =
            km.counts[j] > 1
                ? std::max(scatter[static_cast<size_t>(j) * dim + d] / km.counts[j],
                           config.variance_floor)
                : global_var[d];
      }
    }
  }

  model.validate();
  return model;
}

std::pair<HmmModel, TrainReport> baum_welch(const HmmModel& init,
                                            const std::vector<FeatureSequence>& data,
                                            const TrainConfig& config) {
  config.validate();
  init.validate();
  if (data.empty()) throw DataError("baum_welch: no training sequences");
  for (const auto& seq : data)
    if (seq.dim != init.feature_dim())
      throw DataError("baum_welch: sequence dimension does not match the model");

  HmmModel model = init;
  TrainReport report;
  double prev_ll = 0.0;
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    SuffStats stats = SuffStats::zeros(model);
    for (const auto& seq : data) stats.merge(accumulate_stats(model, seq));
    const double ll = stats.log_likelihood;
    if (!std::isfinite(ll)) throw NumericError("baum_welch: non-finite data log-likelihood");
    report.log_likelihoods.push_back(ll);
    report.iterations_run = iter;
    if (iter > 1) {
      const double delta = ll - prev_ll;
      if (delta < 0.0) report.max_decrease = std::max(report.max_decrease, -delta);
      if (delta / std::max(std::abs(ll), 1e-10) < config.log_likelihood_tol) {
        report.converged = true;
        break;
      }
    }
    prev_ll = ll;
    model = reestimate(model, stats, config, iter, &report.notes);
    model.validate();
  }
  return {std::move(model), std::move(report)};
}

HmmModel train_speaker(const TrainConfig& config, const std::vector<FeatureSequence>& data,
                       TrainReport* report) {
  HmmModel init = init_model(config, data);
  auto [model, rep] = baum_welch(init, data, config);
  if (report != nullptr) *report = std::move(rep);
  return model;
}

}  // namespace hohmm
