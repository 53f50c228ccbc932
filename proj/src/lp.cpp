#include "dsqkd/lp.hpp"

#include <cmath>
#include <stdexcept>

namespace dsqkd::lp {

namespace {

constexpr double kTol = 1e-11;
constexpr int kMaxIter = 20000;

enum class VarState { at_lower, at_upper, basic };

// Equality-form working problem: A z = b with per-column bounds, where z
// stacks structural variables, one slack per kept row, and phase-1
// artificials.
struct Working {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd lo, hi;
  int n_struct = 0;
  int n_rows = 0;
  int n_total = 0; // struct + slacks + artificials
  int first_artificial = 0;
};

struct BasisState {
  std::vector<int> basis;        // variable index per row
  std::vector<VarState> state;   // per variable
  Eigen::VectorXd x;             // current values, all variables
};

enum class PhaseResult { optimal, unbounded, iter_limit };

// One simplex phase over the working problem for objective c (sized
// n_total).
PhaseResult run_simplex(const Working& w, const Eigen::VectorXd& c, BasisState& s) {
  const int m = w.n_rows;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::MatrixXd basis_mat(m, m);
    for (int r = 0; r < m; ++r) basis_mat.col(r) = w.a.col(s.basis[r]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_mat);

    Eigen::VectorXd cb(m);
    for (int r = 0; r < m; ++r) cb[r] = c[s.basis[r]];
    Eigen::VectorXd y = lu.transpose().solve(cb);

    // Bland: smallest-index improving nonbasic column enters.
    int entering = -1;
    bool from_lower = true;
    for (int j = 0; j < w.n_total; ++j) {
      if (s.state[j] == VarState::basic) continue;
      if (w.lo[j] == w.hi[j]) continue; // pinned (retired artificials)
      double rc = c[j] - w.a.col(j).dot(y);
      if (s.state[j] == VarState::at_lower && rc < -kTol) {
        entering = j;
        from_lower = true;
        break;
      }
      if (s.state[j] == VarState::at_upper && rc > kTol) {
        entering = j;
        from_lower = false;
        break;
      }
    }
    if (entering < 0) return PhaseResult::optimal;

    Eigen::VectorXd dir = lu.solve(w.a.col(entering));
    // Entering moves by t >= 0 (increase from lower / decrease from
    // upper); basic i changes by -sign * dir[i] * t.
    double sign = from_lower ? 1.0 : -1.0;

    double t_max = w.hi[entering] - w.lo[entering]; // bound-to-bound flip
    int leaving_row = -1;
    for (int r = 0; r < m; ++r) {
      double delta = -sign * dir[r];
      int vb = s.basis[r];
      double t_limit = kInf;
      if (delta < -kTol) {
        if (w.lo[vb] == -kInf) continue;
        t_limit = (s.x[vb] - w.lo[vb]) / (-delta);
      } else if (delta > kTol) {
        if (w.hi[vb] == kInf) continue;
        t_limit = (w.hi[vb] - s.x[vb]) / delta;
      } else {
        continue;
      }
      if (t_limit < t_max - kTol ||
          (t_limit < t_max + kTol && leaving_row >= 0 &&
           s.basis[r] < s.basis[leaving_row])) {
        t_max = std::max(t_limit, 0.0);
        leaving_row = r;
      }
    }

    if (t_max == kInf) return PhaseResult::unbounded;

    // Apply the step.
    for (int r = 0; r < m; ++r) s.x[s.basis[r]] += -sign * dir[r] * t_max;
    s.x[entering] += sign * t_max;

    if (leaving_row < 0) {
      // Bound-to-bound move, basis unchanged.
      s.state[entering] = from_lower ? VarState::at_upper : VarState::at_lower;
      s.x[entering] = from_lower ? w.hi[entering] : w.lo[entering];
      continue;
    }

    int leaving = s.basis[leaving_row];
    double delta = -sign * dir[leaving_row];
    if (delta < 0.0) {
      s.state[leaving] = VarState::at_lower;
      s.x[leaving] = w.lo[leaving];
    } else {
      s.state[leaving] = VarState::at_upper;
      s.x[leaving] = w.hi[leaving];
    }
    s.basis[leaving_row] = entering;
    s.state[entering] = VarState::basic;
  }
  return PhaseResult::iter_limit;
}

} // namespace

void LinearProgram::validate() const {
  const auto n = objective.size();
  if (var_lower.size() != n || var_upper.size() != n)
    throw std::invalid_argument("lp: variable bound dimensions inconsistent");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(var_lower[j] <= var_upper[j]))
      throw std::invalid_argument("lp: variable lower bound exceeds upper");
    if (var_lower[j] == -kInf)
      throw std::invalid_argument("lp: variable lower bounds must be finite");
  }
  for (const auto& row : constraints) {
    if (row.coeffs.size() != n)
      throw std::invalid_argument("lp: constraint dimension mismatch");
    if (!(row.lower <= row.upper))
      throw std::invalid_argument("lp: constraint lower bound exceeds upper");
  }
}

Solution solve_min(const LinearProgram& lp) {
  lp.validate();
  const int n = static_cast<int>(lp.objective.size());

  // Normalize rows so the finite bound sits on the upper side, then add
  // one ranged slack per row: a.x + s = upper, s in [0, upper - lower].
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs, slack_hi;
  for (const auto& row : lp.constraints) {
    if (row.lower == -kInf && row.upper == kInf) continue;
    Eigen::VectorXd a = row.coeffs;
    double blo = row.lower, bhi = row.upper;
    if (bhi == kInf) {
      a = -a;
      bhi = -blo;
      blo = -kInf;
    }
    rows.push_back(std::move(a));
    rhs.push_back(bhi);
    slack_hi.push_back(blo == -kInf ? kInf : bhi - blo);
  }
  const int m = static_cast<int>(rows.size());

  Solution sol;
  sol.point = Eigen::VectorXd::Zero(n);

  if (m == 0) {
    // Box-only problem: each variable sits at whichever bound minimizes.
    for (int j = 0; j < n; ++j) {
      double c = lp.objective[j];
      if (c >= 0.0)
        sol.point[j] = lp.var_lower[j];
      else if (lp.var_upper[j] == kInf)
        return Solution{Status::unbounded, 0.0, sol.point};
      else
        sol.point[j] = lp.var_upper[j];
    }
    sol.status = Status::optimal;
    sol.value = lp.objective.dot(sol.point);
    return sol;
  }

  Working w;
  w.n_struct = n;
  w.n_rows = m;
  w.first_artificial = n + m;
  w.n_total = n + 2 * m; // reserve one artificial per row, pin unused ones
  w.a = Eigen::MatrixXd::Zero(m, w.n_total);
  w.b = Eigen::VectorXd::Zero(m);
  w.lo = Eigen::VectorXd::Zero(w.n_total);
  w.hi = Eigen::VectorXd::Zero(w.n_total);
  for (int r = 0; r < m; ++r) {
    w.a.row(r).head(n) = rows[r].transpose();
    w.a(r, n + r) = 1.0;
    w.b[r] = rhs[r];
  }
  for (int j = 0; j < n; ++j) {
    w.lo[j] = lp.var_lower[j];
    w.hi[j] = lp.var_upper[j];
  }
  for (int r = 0; r < m; ++r) {
    w.lo[n + r] = 0.0;
    w.hi[n + r] = slack_hi[r];
  }

  BasisState st;
  st.state.assign(w.n_total, VarState::at_lower);
  st.x = Eigen::VectorXd::Zero(w.n_total);
  for (int j = 0; j < n; ++j) st.x[j] = w.lo[j];

  bool need_phase1 = false;
  st.basis.resize(m);
  for (int r = 0; r < m; ++r) {
    double s0 = w.b[r] - rows[r].dot(st.x.head(n));
    int art = w.first_artificial + r;
    if (s0 >= -kTol && (slack_hi[r] == kInf || s0 <= slack_hi[r] + kTol)) {
      // Slack basic; the spare artificial stays pinned at zero.
      st.basis[r] = n + r;
      st.state[n + r] = VarState::basic;
      st.x[n + r] = std::min(std::max(s0, 0.0), slack_hi[r]);
    } else if (s0 > 0.0) {
      // Slack parked at its upper bound; artificial absorbs the excess.
      st.state[n + r] = VarState::at_upper;
      st.x[n + r] = slack_hi[r];
      w.a(r, art) = 1.0;
      w.lo[art] = 0.0;
      w.hi[art] = kInf;
      st.basis[r] = art;
      st.state[art] = VarState::basic;
      st.x[art] = s0 - slack_hi[r];
      need_phase1 = true;
    } else {
      st.state[n + r] = VarState::at_lower;
      st.x[n + r] = 0.0;
      w.a(r, art) = -1.0;
      w.lo[art] = 0.0;
      w.hi[art] = kInf;
      st.basis[r] = art;
      st.state[art] = VarState::basic;
      st.x[art] = -s0;
      need_phase1 = true;
    }
  }

  if (need_phase1) {
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(w.n_total);
    for (int r = 0; r < m; ++r)
      if (w.a(r, w.first_artificial + r) != 0.0) c1[w.first_artificial + r] = 1.0;
    if (run_simplex(w, c1, st) != PhaseResult::optimal)
      throw std::runtime_error("lp: phase 1 failed to converge");
    double infeas = 0.0;
    for (int r = 0; r < m; ++r) {
      int art = w.first_artificial + r;
      if (w.a(r, art) != 0.0) infeas += st.x[art];
    }
    if (infeas > 1e-9) {
      sol.status = Status::infeasible;
      return sol;
    }
    // Pin artificials for phase 2.
    for (int r = 0; r < m; ++r) {
      int art = w.first_artificial + r;
      w.hi[art] = 0.0;
      st.x[art] = std::max(0.0, std::min(st.x[art], 0.0));
    }
  }

  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(w.n_total);
  c2.head(n) = lp.objective;
  PhaseResult r2 = run_simplex(w, c2, st);
  if (r2 == PhaseResult::iter_limit)
    throw std::runtime_error("lp: phase 2 iteration limit exceeded");
  if (r2 == PhaseResult::unbounded) {
    sol.status = Status::unbounded;
    return sol;
  }

  sol.point = st.x.head(n);
  sol.value = lp.objective.dot(sol.point);
  sol.status = Status::optimal;
  return sol;
}

} // namespace dsqkd::lp
