// src/inference.cc

#include "hohmm/inference.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "hohmm/errors.h"
#include "hohmm/logmath.h"

namespace hohmm {

namespace {

int pow_int(int base, int exp) {
  int v = 1;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

void check_obs(const HmmModel& model, const FeatureSequence& obs) {
  if (obs.num_frames() < 1) throw DataError("inference: empty observation sequence");
  if (obs.dim != model.feature_dim())
    throw DataError("inference: observation dim " + std::to_string(obs.dim) +
                    " != model dim " + std::to_string(model.feature_dim()));
}

// Digit reversal of a base-N context code; orders tuple codes by the newest
// state first, which is the tie-break order for Viterbi.
int reversed_code(int code, int length, int n) {
  int rev = 0;
  for (int i = 0; i < length; ++i) {
    rev = rev * n + code % n;
    code /= n;
  }
  return rev;
}

struct LogTables {
  std::array<std::vector<double>, 3> level;
  std::vector<double> initial;

  explicit LogTables(const HmmModel& m) {
    initial = log_table(m.initial);
    for (int l = 1; l <= m.order; ++l) level[l - 1] = log_table(m.transition_level(l));
  }
};

// Backward lattice over all t, including the partial-tuple ramp.
Trellis backward_impl(const HmmModel& model, const FeatureSequence& obs,
                      const std::vector<double>& logb, const LogTables& tables) {
  const int n = model.num_states;
  const int r = model.order;
  const int t_count = obs.num_frames();
  const int full = pow_int(n, r);
  const int heads = full / n;

  Trellis tr;
  tr.order = r;
  tr.num_states = n;
  tr.log_values.resize(t_count);
  tr.log_values[t_count - 1].assign(full, 0.0);  // t_count >= r here

  std::vector<double> terms(n);
  for (int t = t_count - 2; t >= r - 1; --t) {
    const auto& a = tables.level[r - 1];
    const auto& next = tr.log_values[t + 1];
    auto& cur = tr.log_values[t];
    cur.resize(full);
    for (int c = 0; c < full; ++c) {
      const int head = c % heads;
      for (int x = 0; x < n; ++x)
        terms[x] = a[static_cast<size_t>(c) * n + x] + logb[(t + 1) * n + x] +
                   next[head * n + x];
      cur[c] = log_sum_exp(terms);
    }
  }
  // Ramp: tuples still growing, so each successor extends the tuple.
  for (int t = std::min(r - 2, t_count - 2); t >= 0; --t) {
    const auto& a = tables.level[t];  // level t+1 table
    const auto& next = tr.log_values[t + 1];
    auto& cur = tr.log_values[t];
    cur.resize(pow_int(n, t + 1));
    for (size_t c = 0; c < cur.size(); ++c) {
      for (int x = 0; x < n; ++x)
        terms[x] = a[c * n + x] + logb[(t + 1) * n + x] + next[c * n + x];
      cur[c] = log_sum_exp(terms);
    }
  }
  return tr;
}

}  // namespace

std::vector<double> emission_log_densities(const HmmModel& model,
                                           const FeatureSequence& obs) {
  const int n = model.num_states;
  const int t_count = obs.num_frames();
  std::vector<double> logb(static_cast<size_t>(t_count) * n);
  for (int s = 0; s < n; ++s) {
    const auto& gmm = model.emissions[s];
    for (int t = 0; t < t_count; ++t)
      logb[static_cast<size_t>(t) * n + s] = gmm.log_density(obs.frame(t));
  }
  return logb;
}

double sequence_log_prob(const HmmModel& model, std::span<const int> path) {
  if (path.empty()) throw DataError("sequence_log_prob: empty state path");
  const int n = model.num_states;
  for (int q : path)
    if (q < 0 || q >= n)
      throw DataError("sequence_log_prob: state index " + std::to_string(q) +
                      " out of range [0, " + std::to_string(n) + ")");

  const int r = model.order;
  const int roll = pow_int(n, r - 1);
  double lp = model.initial[path[0]] > 0.0 ? std::log(model.initial[path[0]]) : kLogZero;
  int ctx = path[0];
  int len = 1;
  for (size_t t = 1; t < path.size(); ++t) {
    const auto& a = model.transition_level(std::min(static_cast<int>(t), r));
    const double p = a[static_cast<size_t>(ctx) * n + path[t]];
    lp += p > 0.0 ? std::log(p) : kLogZero;
    if (len < r) {
      ctx = ctx * n + path[t];
      ++len;
    } else {
      ctx = (ctx % roll) * n + path[t];
    }
  }
  return lp;
}

double joint_log_prob(const HmmModel& model, std::span<const int> path,
                      const FeatureSequence& obs) {
  if (static_cast<int>(path.size()) != obs.num_frames())
    throw DataError("joint_log_prob: path length " + std::to_string(path.size()) +
                    " != frame count " + std::to_string(obs.num_frames()));
  check_obs(model, obs);
  double lp = sequence_log_prob(model, path);
  for (int t = 0; t < obs.num_frames(); ++t)
    lp += model.emissions[path[t]].log_density(obs.frame(t));
  return lp;
}

ForwardResult forward(const HmmModel& model, const FeatureSequence& obs) {
  check_obs(model, obs);
  const int n = model.num_states;
  const int r = model.order;
  const int t_count = obs.num_frames();
  const std::vector<double> logb = emission_log_densities(model, obs);
  const LogTables tables(model);

  Trellis tr;
  tr.order = r;
  tr.num_states = n;
  tr.log_values.resize(t_count);
  auto& lat = tr.log_values;

  lat[0].resize(n);
  for (int i = 0; i < n; ++i) lat[0][i] = tables.initial[i] + logb[i];

  std::vector<double> terms(n);
  const int heads = pow_int(n, r - 1);
  for (int t = 1; t < t_count; ++t) {
    const auto& a = tables.level[std::min(t, r) - 1];
    const auto& prev = lat[t - 1];
    if (t < r) {
      lat[t].resize(prev.size() * n);
      for (size_t c = 0; c < prev.size(); ++c)
        for (int x = 0; x < n; ++x)
          lat[t][c * n + x] = prev[c] + a[c * n + x] + logb[static_cast<size_t>(t) * n + x];
    } else {
      lat[t].resize(static_cast<size_t>(heads) * n);
      for (int head = 0; head < heads; ++head) {
        for (int x = 0; x < n; ++x) {
          for (int i = 0; i < n; ++i) {
            const int c = i * heads + head;
            terms[i] = prev[c] + a[static_cast<size_t>(c) * n + x];
          }
          lat[t][head * n + x] = log_sum_exp(terms) + logb[static_cast<size_t>(t) * n + x];
        }
      }
    }
  }
  const double total = log_sum_exp(lat[t_count - 1]);
  return {std::move(tr), total};
}

Trellis backward(const HmmModel& model, const FeatureSequence& obs) {
  check_obs(model, obs);
  if (obs.num_frames() < model.order)
    throw DataError("backward: sequence shorter than the model order");
  const std::vector<double> logb = emission_log_densities(model, obs);
  const LogTables tables(model);
  return backward_impl(model, obs, logb, tables);
}

ViterbiResult viterbi(const HmmModel& model, const FeatureSequence& obs) {
  check_obs(model, obs);
  const int n = model.num_states;
  const int r = model.order;
  const int t_count = obs.num_frames();
  const std::vector<double> logb = emission_log_densities(model, obs);
  const LogTables tables(model);

  Trellis tr;
  tr.order = r;
  tr.num_states = n;
  tr.log_values.resize(t_count);
  tr.backpointers.resize(t_count);
  auto& lat = tr.log_values;
  auto& bp = tr.backpointers;

  lat[0].resize(n);
  for (int i = 0; i < n; ++i) lat[0][i] = tables.initial[i] + logb[i];

  const int heads = pow_int(n, r - 1);
  for (int t = 1; t < t_count; ++t) {
    const auto& a = tables.level[std::min(t, r) - 1];
    const auto& prev = lat[t - 1];
    if (t < r) {
      lat[t].resize(prev.size() * n);
      for (size_t c = 0; c < prev.size(); ++c)
        for (int x = 0; x < n; ++x)
          lat[t][c * n + x] = prev[c] + a[c * n + x] + logb[static_cast<size_t>(t) * n + x];
    } else {
      lat[t].resize(static_cast<size_t>(heads) * n);
      bp[t].resize(lat[t].size());
      for (int head = 0; head < heads; ++head) {
        for (int x = 0; x < n; ++x) {
          int best_i = 0;
          double best = kLogZero;
          for (int i = 0; i < n; ++i) {
            const int c = i * heads + head;
            const double cand = prev[c] + a[static_cast<size_t>(c) * n + x];
            if (cand > best) {
              best = cand;
              best_i = i;
            }
          }
          lat[t][head * n + x] = best + logb[static_cast<size_t>(t) * n + x];
          bp[t][head * n + x] = best_i;
        }
      }
    }
  }

  // Final tuple: maximum value, ties to the smallest newest-first code.
  const auto& last = lat[t_count - 1];
  const int last_len = std::min(t_count, r);
  int best_c = 0;
  double best = last[0];
  int best_rev = reversed_code(0, last_len, n);
  for (int c = 1; c < static_cast<int>(last.size()); ++c) {
    const int rev = reversed_code(c, last_len, n);
    if (last[c] > best || (last[c] == best && rev < best_rev)) {
      best = last[c];
      best_c = c;
      best_rev = rev;
    }
  }

  ViterbiResult result;
  result.log_prob = best;
  result.path.resize(t_count);
  int code = best_c;
  for (int k = 0; k < last_len; ++k) {
    result.path[t_count - 1 - k] = code % n;
    code /= n;
  }
  int cur = best_c;
  for (int t = t_count - 1; t >= r; --t) {
    const int i = bp[t][cur];
    result.path[t - r] = i;
    cur = i * heads + cur / n;
  }
  return result;
}

std::vector<double> CompositeExpansion::start_log_mass(const FeatureSequence& obs) const {
  const int n = source.num_states;
  const int r = source.order;
  if (obs.num_frames() < r)
    throw DataError("start_log_mass: sequence shorter than the source order");

  // Forward over the first r-1 frames, then the transition into frame r-1
  // without its emission.
  FeatureSequence prefix;
  prefix.dim = obs.dim;
  prefix.data.assign(obs.data.begin(),
                     obs.data.begin() + static_cast<size_t>(r - 1) * obs.dim);
  const ForwardResult fr = forward(source, prefix);
  const auto& lat = fr.trellis.log_values[r - 2];
  const auto& a = source.transition_level(r - 1);

  std::vector<double> mass(lat.size() * n);
  for (size_t c = 0; c < lat.size(); ++c)
    for (int x = 0; x < n; ++x) {
      const double p = a[c * n + x];
      mass[c * n + x] = lat[c] + (p > 0.0 ? std::log(p) : kLogZero);
    }
  return mass;
}

double CompositeExpansion::forward_log_likelihood(const FeatureSequence& obs) const {
  const int r = source.order;
  const int t_count = obs.num_frames();
  if (t_count < r)
    throw DataError("composite forward: sequence shorter than the source order");

  const int c_count = first_order.num_states;
  const std::vector<double> logb = emission_log_densities(first_order, obs);
  const std::vector<double> log_trans = log_table(first_order.trans1);

  std::vector<double> cur = start_log_mass(obs);
  for (int c = 0; c < c_count; ++c) cur[c] += logb[static_cast<size_t>(r - 1) * c_count + c];

  std::vector<double> next(c_count);
  std::vector<double> terms(c_count);
  for (int t = r; t < t_count; ++t) {
    for (int c2 = 0; c2 < c_count; ++c2) {
      for (int c = 0; c < c_count; ++c)
        terms[c] = cur[c] + log_trans[static_cast<size_t>(c) * c_count + c2];
      next[c2] = log_sum_exp(terms) + logb[static_cast<size_t>(t) * c_count + c2];
    }
    cur.swap(next);
  }
  return log_sum_exp(cur);
}

CompositeExpansion expand_to_first_order(const HmmModel& model) {
  if (model.order == 1)
    throw DataError("expand_to_first_order: model is already first order");
  model.validate();

  const int n = model.num_states;
  const int r = model.order;
  const int c_count = pow_int(n, r);
  const int heads = c_count / n;
  const auto& top = model.transition_level(r);

  CompositeExpansion expansion;
  expansion.source = model;

  HmmModel& composite = expansion.first_order;
  composite.order = 1;
  composite.num_states = c_count;
  composite.initial.assign(c_count, 1.0 / c_count);
  composite.trans1.assign(static_cast<size_t>(c_count) * c_count, 0.0);
  composite.emissions.reserve(c_count);
  for (int c = 0; c < c_count; ++c) {
    composite.emissions.push_back(model.emissions[c % n]);
    const int head = c % heads;
    for (int x = 0; x < n; ++x)
      composite.trans1[static_cast<size_t>(c) * c_count + head * n + x] =
          top[static_cast<size_t>(c) * n + x];
  }
  return expansion;
}

}  // namespace hohmm
