#pragma once

// Interprocess coupling/cohesion metrics, quality scalars, rank correlation
// and two-cluster classification.

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "distflow/phase2.hpp"
#include "distflow/trace.hpp"

namespace distflow {

struct DepData {
  std::map<MethodId, std::set<MethodId>> local_ds;   // same-process dependents, excluding the method
  std::map<MethodId, std::set<MethodId>> remote_ds;  // dependents in other processes
  std::set<MethodId> executed;
  std::map<std::pair<ProcessId, ProcessId>, std::size_t> messages;  // (sender, receiver)

  /// Throws Error(data) when a set strays outside `executed` or the wrong process.
  void validate() const;
};

/// Dependence sets split into local/remote parts; message counts from sends.
DepData dep_data(const TraceSet& traces, const std::map<MethodId, std::set<MethodId>>& ds);
/// DepData from the happens-before dependence sets of every executed method.
DepData dep_data(const TraceSet& traces, const FirstMsgMap& first_msgs);

struct ClassKey {
  ProcessId process = 0;
  std::string name;

  friend auto operator<=>(const ClassKey&, const ClassKey&) = default;
  std::string str() const;
};

enum class RccVariant {
  prose,  // methods of c1 that c2 depends on / remote dependents of c1
  table,  // methods of c2 depending on c1 / remote dependents of c1
};

struct IpcReport {
  double rmc = 0, rcc = 0, ccc = 0, ipr = 0, ccl = 0, plc = 0;
  bool empty = false;  // nothing executed; every value is 0

  std::map<std::pair<ProcessId, ProcessId>, double> process_rmc;
  std::map<ProcessId, double> process_rcc;
  std::map<std::pair<ClassKey, ClassKey>, double> class_rcc;
  std::map<ClassKey, double> class_ccc;
  std::map<MethodId, double> method_ipr;
  std::map<ClassKey, double> class_ccl;
  std::map<ProcessId, double> process_plc;
};

IpcReport ipc_metrics(const DepData& dep, RccVariant variant = RccVariant::prose);

/// "RMC RCC CCC IPR CCL PLC" header plus one row of values.
void write_ipc_report(std::ostream& out, const IpcReport& report, const std::string& label);

/// sqrt(n1^2 + n2^2 + n3^2) / sloc. Throws ConfigError when sloc <= 0.
double attack_surface(double endpoint_methods, double ports, double files, double sloc);

struct Vulnerability {
  double cvss = 0;
  double years = 0;  // since it was found
};

/// Non-NVD count plus CVSS weighted by recency. The printed weight is
/// (100 - years / 100); `corrected` uses (100 - years) / 100.
double vulnerableness(double non_nvd, const std::vector<Vulnerability>& entries, bool corrected = false);

struct QualityVector {
  double exec_time = 0, code_churn = 0, cyclomatic = 0, defect_density = 0;
  double path_count = 0, path_length = 0, attack_surface = 0, vulnerableness = 0;
  std::string units = "per_ksloc";
};

inline constexpr const char* kQualityNames[] = {"exec_time",  "code_churn", "cyclomatic",     "defect_density",
                                                 "path_count", "path_length", "attack_surface", "vulnerableness"};
inline constexpr const char* kIpcNames[] = {"RMC", "RCC", "CCC", "IPR", "CCL", "PLC"};

QualityVector read_quality(std::istream& in);
std::vector<double> as_vector(const QualityVector& q);
std::vector<double> as_vector(const IpcReport& r);

struct Correlation {
  std::optional<double> r;  // empty when either series is constant
  double p = 1;
  bool significant = false;  // |r| >= 0.4
};

/// Average ranks, 1-based.
std::vector<double> average_ranks(const std::vector<double>& xs);

/// Throws ConfigError when the lengths differ or there are fewer than 3 points.
Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;        // 2 x d
  std::vector<double> objective;  // within-cluster sum of squares after each assignment
  std::size_t iterations = 0;
};

/// Rows are points. Throws ConfigError when fewer than two distinct points.
KMeansResult kmeans2(const Eigen::MatrixXd& points, std::uint64_t seed = 0);

struct PathStats {
  double count_per_ksloc = 0;
  double mean_length_per_ksloc = 0;
};

/// Length is the number of statements on a path.
PathStats path_stats(const std::vector<StmtFlowPath>& paths, double ksloc);

}  // namespace distflow
