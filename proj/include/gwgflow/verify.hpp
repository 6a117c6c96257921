#pragma once

#include <string>
#include <vector>

namespace gwg {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double bound_lo = 0.0;
    double bound_hi = 0.0;
    bool pass = false;
};

struct VerifyHooks {
    bool corrupt_cd_score_sign = false; // negative control for the gradient row
};

// Analytic-oracle suite: conjugate identities, Hutchinson enumeration,
// finite-difference gradient checks, the 1-D quadrature brackets, and the
// brute-force transport triangle trials. Every row carries its bounds.
std::vector<CheckResult> verify_suite(const VerifyHooks& hooks = {});

// Individual batteries, reused by the acceptance tests.
CheckResult check_loss_grad_fd(int n_nets);                 // max rel err vs 1e-5
CheckResult check_hutchinson_enumeration(int n_nets);       // max abs err vs 1e-10
std::vector<CheckResult> check_example1_brackets();         // score-div inside bounds, KL floor
std::vector<CheckResult> check_prop5_triangles(int trials_per_p); // min slack vs -1e-9
CheckResult check_cd_score_fd(bool corrupt_sign = false);   // max rel err vs 1e-5

} // namespace gwg
