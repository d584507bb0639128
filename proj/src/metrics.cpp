#include "distflow/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "distflow/error.hpp"
#include "distflow/phase1.hpp"

namespace distflow {

void DepData::validate() const {
  auto check = [&](const auto& table, bool local) {
    for (const auto& [m, set] : table) {
      if (!executed.count(m)) throw Error(ErrorKind::data, "dependence set for unexecuted " + m.str());
      for (const auto& d : set) {
        if (!executed.count(d)) throw Error(ErrorKind::data, "unexecuted dependent " + d.str());
        if ((d.process == m.process) != local) {
          throw Error(ErrorKind::data, "dependent " + d.str() + " in the wrong set of " + m.str());
        }
      }
    }
  };
  check(local_ds, true);
  check(remote_ds, false);
}

DepData dep_data(const TraceSet& traces, const std::map<MethodId, std::set<MethodId>>& ds) {
  DepData out;
  for (const auto& [m, set] : ds) {
    out.executed.insert(m);
    auto& local = out.local_ds[m];
    auto& remote = out.remote_ds[m];
    for (const auto& d : set) {
      if (d == m) continue;
      (d.process == m.process ? local : remote).insert(d);
    }
  }
  for (const auto& t : traces) {
    for (const auto& e : t.events) {
      if (e.kind == EventKind::send && e.peer) ++out.messages[{t.process, *e.peer}];
    }
  }
  return out;
}

DepData dep_data(const TraceSet& traces, const FirstMsgMap& first_msgs) {
  Phase1Context ctx(traces, first_msgs);
  std::map<MethodId, std::set<MethodId>> ds;
  for (const auto& [m, span] : ctx.executed()) ds[m] = ctx.method_ds(m).members;
  return dep_data(traces, ds);
}

std::string ClassKey::str() const { return "p" + std::to_string(process) + "." + name; }

namespace {

double ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

template <typename Map>
double mean_of(const Map& m) {
  if (m.empty()) return 0;
  double sum = 0;
  for (const auto& [k, v] : m) sum += v;
  return sum / static_cast<double>(m.size());
}

const std::set<MethodId>& lookup(const std::map<MethodId, std::set<MethodId>>& table, const MethodId& m) {
  static const std::set<MethodId> none;
  auto it = table.find(m);
  return it == table.end() ? none : it->second;
}

}  // namespace

IpcReport ipc_metrics(const DepData& dep, RccVariant variant) {
  IpcReport r;
  if (dep.executed.empty()) {
    r.empty = true;
    return r;
  }

  for (const auto& [pair, n] : dep.messages) {
    if (n > 0) r.process_rmc[pair] = static_cast<double>(n);
  }
  r.rmc = mean_of(r.process_rmc);

  std::map<ClassKey, std::vector<MethodId>> classes;
  std::map<ProcessId, std::vector<MethodId>> processes;
  for (const auto& m : dep.executed) {
    classes[ClassKey{m.process, m.class_name}].push_back(m);
    processes[m.process].push_back(m);
  }

  // remote dependents of each class, shared by both RCC variants
  std::map<ClassKey, std::set<MethodId>> remote_of_class;
  for (const auto& [c, methods] : classes) {
    auto& u = remote_of_class[c];
    for (const auto& m : methods) {
      const auto& rs = lookup(dep.remote_ds, m);
      u.insert(rs.begin(), rs.end());
    }
  }

  for (const auto& [c1, methods1] : classes) {
    const double den = static_cast<double>(remote_of_class[c1].size());
    double ccc = 0;
    for (const auto& [c2, methods2] : classes) {
      if (c2.process == c1.process) continue;
      std::size_t num = 0;
      if (variant == RccVariant::prose) {
        for (const auto& m : methods1) {
          const auto& rs = lookup(dep.remote_ds, m);
          if (std::any_of(methods2.begin(), methods2.end(), [&](const MethodId& y) { return rs.count(y) > 0; })) ++num;
        }
      } else {
        for (const auto& y : methods2) num += remote_of_class[c1].count(y);
      }
      const double v = ratio(static_cast<double>(num), den);
      r.class_rcc[{c1, c2}] = v;
      ccc += v;
    }
    r.class_ccc[c1] = ccc;

    double remote_sizes = 0;
    for (const auto& m : methods1) remote_sizes += static_cast<double>(lookup(dep.remote_ds, m).size());
    r.class_ccl[c1] = remote_sizes / static_cast<double>(methods1.size());
  }
  r.ccc = mean_of(r.class_ccc);
  r.ccl = mean_of(r.class_ccl);

  for (const auto& [p, methods] : processes) {
    std::set<MethodId> remote_union, all_union;
    double local_sizes = 0;
    for (const auto& m : methods) {
      const auto& ls = lookup(dep.local_ds, m);
      const auto& rs = lookup(dep.remote_ds, m);
      remote_union.insert(rs.begin(), rs.end());
      all_union.insert(rs.begin(), rs.end());
      all_union.insert(ls.begin(), ls.end());
      local_sizes += static_cast<double>(ls.size());
    }
    r.process_rcc[p] = ratio(static_cast<double>(remote_union.size()), static_cast<double>(all_union.size()));
    r.process_plc[p] = local_sizes / static_cast<double>(methods.size());
  }
  r.rcc = mean_of(r.process_rcc);
  r.plc = mean_of(r.process_plc);

  // local and remote dependents live in different processes, so overlap is
  // judged on the code they run
  const double executed = static_cast<double>(dep.executed.size());
  double ipr_sum = 0;
  for (const auto& m : dep.executed) {
    std::set<std::string> local_sigs, shared;
    for (const auto& d : lookup(dep.local_ds, m)) local_sigs.insert(d.signature());
    for (const auto& d : lookup(dep.remote_ds, m)) {
      if (local_sigs.count(d.signature())) shared.insert(d.signature());
    }
    const double v = static_cast<double>(shared.size()) / executed;
    r.method_ipr[m] = v;
    ipr_sum += v;
  }
  r.ipr = ipr_sum / executed;
  return r;
}

void write_ipc_report(std::ostream& out, const IpcReport& r, const std::string& label) {
  out << "execution RMC RCC CCC IPR CCL PLC\n";
  out << label << std::fixed << std::setprecision(10);
  for (double v : as_vector(r)) out << ' ' << v;
  out << '\n';
  if (r.empty) out << "warning: empty execution\n";
}

double attack_surface(double n1, double n2, double n3, double sloc) {
  if (!(sloc > 0)) throw ConfigError("attack surface needs a positive SLOC");
  return std::sqrt(n1 * n1 + n2 * n2 + n3 * n3) / sloc;
}

double vulnerableness(double non_nvd, const std::vector<Vulnerability>& entries, bool corrected) {
  double v = non_nvd;
  for (const auto& e : entries) v += e.cvss * (corrected ? (100 - e.years) / 100 : 100 - e.years / 100);
  return v;
}

QualityVector read_quality(std::istream& in) {
  QualityVector q;
  std::map<std::string, double*> fields{
      {"exec_time", &q.exec_time},   {"code_churn", &q.code_churn},   {"cyclomatic", &q.cyclomatic},
      {"defect_density", &q.defect_density}, {"path_count", &q.path_count}, {"path_length", &q.path_length},
      {"attack_surface", &q.attack_surface}, {"vulnerableness", &q.vulnerableness}};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string key, value;
    if (!(f >> key) || key[0] == '#') continue;
    if (!(f >> value)) throw UsageError("quality key without value: " + key);
    if (key == "units") {
      q.units = value;
      continue;
    }
    auto it = fields.find(key);
    if (it == fields.end()) throw UsageError("unknown quality metric " + key);
    try {
      *it->second = std::stod(value);
    } catch (const std::logic_error&) {
      throw UsageError("bad value for " + key + ": " + value);
    }
  }
  return q;
}

std::vector<double> as_vector(const QualityVector& q) {
  return {q.exec_time, q.code_churn, q.cyclomatic, q.defect_density,
          q.path_count, q.path_length, q.attack_surface, q.vulnerableness};
}

std::vector<double> as_vector(const IpcReport& r) { return {r.rmc, r.rcc, r.ccc, r.ipr, r.ccl, r.plc}; }

std::vector<double> average_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ConfigError("correlation series differ in length");
  if (xs.size() < 3) throw ConfigError("correlation needs at least 3 points");
  Correlation out;
  const auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(rx) || constant(ry)) return out;

  const double r = std::clamp(pearson(rx, ry), -1.0, 1.0);
  out.r = r;
  out.significant = std::abs(r) >= 0.4;
  const std::size_t n = xs.size();
  if (n <= 10) {
    // every distinct arrangement of the y ranks stands for the same number of
    // raw permutations, so counting arrangements gives the exact p
    std::sort(ry.begin(), ry.end());
    std::size_t hits = 0, total = 0;
    do {
      ++total;
      if (std::abs(pearson(rx, ry)) >= std::abs(r) - 1e-12) ++hits;
    } while (std::next_permutation(ry.begin(), ry.end()));
    out.p = static_cast<double>(hits) / static_cast<double>(total);
  } else if (std::abs(r) >= 1.0) {
    out.p = 0;
  } else {
    const double df = static_cast<double>(n - 2);
    const double t = r * std::sqrt(df / (1 - r * r));
    boost::math::students_t dist(df);
    out.p = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return out;
}

KMeansResult kmeans2(const Eigen::MatrixXd& points, std::uint64_t seed) {
  const auto n = points.rows();
  if (n < 2) throw ConfigError("k-means needs at least two points");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> any(0, n - 1);
  const Eigen::Index first = any(rng);
  Eigen::Index second = 0;
  double far = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = (points.row(i) - points.row(first)).squaredNorm();
    if (d > far) {
      far = d;
      second = i;
    }
  }
  if (far <= 0) throw ConfigError("k-means needs at least two distinct points");

  KMeansResult res;
  res.centers.resize(2, points.cols());
  res.centers.row(0) = points.row(first);
  res.centers.row(1) = points.row(second);
  res.labels.assign(static_cast<std::size_t>(n), -1);

  for (;;) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d0 = (points.row(i) - res.centers.row(0)).squaredNorm();
      const double d1 = (points.row(i) - res.centers.row(1)).squaredNorm();
      const int label = d1 < d0 ? 1 : 0;
      if (res.labels[static_cast<std::size_t>(i)] != label) {
        res.labels[static_cast<std::size_t>(i)] = label;
        changed = true;
      }
    }
    if (!changed) break;
    ++res.iterations;
    for (int k = 0; k < 2; ++k) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
      Eigen::Index count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (res.labels[static_cast<std::size_t>(i)] == k) {
          sum += points.row(i);
          ++count;
        }
      }
      if (count > 0) res.centers.row(k) = sum / static_cast<double>(count);
    }
    double sse = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sse += (points.row(i) - res.centers.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    res.objective.push_back(sse);
  }
  return res;
}

PathStats path_stats(const std::vector<StmtFlowPath>& paths, double ksloc) {
  if (!(ksloc > 0)) throw ConfigError("path statistics need a positive KSLOC");
  PathStats s;
  if (paths.empty()) return s;
  double total = 0;
  for (const auto& p : paths) total += static_cast<double>(p.stmts.size());
  s.count_per_ksloc = static_cast<double>(paths.size()) / ksloc;
  s.mean_length_per_ksloc = total / static_cast<double>(paths.size()) / ksloc;
  return s;
}

}  // namespace distflow
