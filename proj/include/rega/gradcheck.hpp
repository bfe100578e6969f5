#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rega {

struct GradCheckEntry {
  std::string group;
  int probes = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool all_pass() const;
  std::string to_string() const;
};

// Central differences (step h) against analytic gradients, relative error
// |a - f| / max(1, |a|) per coordinate. Non-finite probes count as failures.
GradCheckReport gradcheck_gabor(std::uint64_t seed, int draws = 50, double h = 1e-5,
                                double tol = 1e-4);
GradCheckReport gradcheck_kernel(std::uint64_t seed, double h = 1e-5, double tol = 1e-4);
GradCheckReport gradcheck_ops(std::uint64_t seed, double h = 1e-5, double tol = 1e-4);
GradCheckReport gradcheck_network(std::uint64_t seed, int gabor_probes = 20, double h = 1e-5,
                                  double tol = 1e-3);
GradCheckReport gradcheck_fusion(std::uint64_t seed, int gabor_probes = 20, double h = 1e-5,
                                 double tol = 1e-3);

// target: gabor | kernel | ops | network | fusion | all
GradCheckReport run_gradcheck(const std::string& target, std::uint64_t seed);

}  // namespace rega
