#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "lncde/lie_basis.hpp"

namespace lncde {

enum class Family { NCDE, NRDE, LogNCDE };

enum class Activation { Identity, ReLU, SiLU, Tanh };

std::string to_string(Family family);
std::string to_string(Activation act);
Family parse_family(const std::string& name);

double silu(double y);

// Fully connected network R^input_dim -> R^(out_rows x out_cols).
//
// Layer i (zero-based) maps layer_in(i) -> layer_out(i) and applies
// activations[i] elementwise. depth counts weight layers.
struct MlpSpec {
  std::size_t input_dim = 0;
  std::size_t out_rows = 0;
  std::size_t out_cols = 0;
  std::size_t width = 0;
  std::size_t depth = 0;
  std::vector<Activation> activations;

  // Activation placement per family:
  //   NCDE    ReLU hidden, tanh after the last layer
  //   NRDE    ReLU hidden, tanh before the last (linear) layer
  //   LogNCDE SiLU hidden, tanh after the last layer
  static MlpSpec for_family(Family family, std::size_t hidden_state, std::size_t columns,
                            std::size_t width, std::size_t depth);

  std::size_t output_dim() const noexcept { return out_rows * out_cols; }
  std::size_t layer_in(std::size_t i) const noexcept { return i == 0 ? input_dim : width; }
  std::size_t layer_out(std::size_t i) const noexcept { return i + 1 == depth ? output_dim() : width; }
  void validate() const;
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpParams zeros(const MlpSpec& spec);
  void check(const MlpSpec& spec) const;
  std::size_t num_scalars() const;
  MlpParams& operator+=(const MlpParams& other);
  MlpParams& operator*=(double s);
  void set_zero();
};

// f(h) as an out_rows x out_cols matrix (row-major reshape of the last layer).
Eigen::MatrixXd mlp_forward(const MlpParams& params, const MlpSpec& spec, const Eigen::VectorXd& h);

// Directional derivative of mlp_forward at h along dir, by forward-mode
// tangent propagation.
Eigen::MatrixXd mlp_jvp(const MlpParams& params, const MlpSpec& spec, const Eigen::VectorXd& h,
                        const Eigen::VectorXd& dir);

// Antisymmetric v x v matrix C with C(i,j) = lambda_[i,j] for i < j, taken
// from the depth-2 part of a Lyndon-ordered log-signature.
Eigen::MatrixXd bracket_coefficients(const LogSignature& logsig);

// Depth <= 2 Log-ODE vector field built from the columns f(h)e_i:
//   (1/duration) [ sum_i l_i f(h)e_i + sum_{i<j} l_ij (J_{fe_j} f e_i - J_{fe_i} f e_j) ](h)
// evaluated with one JVP per column.
Eigen::VectorXd logode_field(const MlpParams& params, const MlpSpec& spec, const Eigen::VectorXd& h,
                             const LogSignature& logsig, double duration);

// ---------------------------------------------------------------------------
// Batched evaluation with reverse-mode support.
//
// For a batch state H (u x B) evaluates
//   G(:,b) = F_b linear(:,b) + sum_j [ dF_b(h_b)[D_b e_j] ] e_j,   D_b = F_b C_b
// where F_b = f(h_b) and C_b = brackets[b] is antisymmetric (omitted when
// brackets is empty). linear has out_cols rows.

struct FieldDrive {
  Eigen::MatrixXd linear;
  std::vector<Eigen::MatrixXd> brackets;

  bool has_brackets() const noexcept { return !brackets.empty(); }
};

// Forward intermediates kept for the adjoint pass.
struct FieldEvaluation {
  std::vector<Eigen::MatrixXd> pre;       // layer pre-activations Z_i
  std::vector<Eigen::MatrixXd> post;      // post[0] = H, post[i+1] = act(Z_i)
  std::vector<Eigen::MatrixXd> tangent;   // tangent[0] = D, tangent[i+1] for hidden layers
  std::vector<Eigen::MatrixXd> tan_pre;   // W_i tangent[i] for hidden layers
  std::vector<Eigen::MatrixXd> last_sel;  // per column j: selected last-layer tangent pre-activations
  Eigen::MatrixXd output;                 // G
};

void evaluate_field(const MlpParams& params, const MlpSpec& spec, const Eigen::MatrixXd& state,
                    const FieldDrive& drive, FieldEvaluation& eval);

// Accumulates d<G_bar, G>/dparams into grad and writes d<G_bar, G>/dH to state_bar.
void field_vjp(const MlpParams& params, const MlpSpec& spec, const FieldDrive& drive,
               const FieldEvaluation& eval, const Eigen::MatrixXd& output_bar, MlpParams& grad,
               Eigen::MatrixXd& state_bar);

}  // namespace lncde
