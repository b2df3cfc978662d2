#pragma once

#include <memory>

#include "spde/ffn.hpp"
#include "spde/problem.hpp"

namespace spde {

/// How the parameter head maps onto the physical coefficient field:
/// Direct gives k = head, ShiftExp gives k = shift + exp(head), which keeps
/// k positive and mirrors a log-shift data transform.
enum class KTransform { Direct, ShiftExp };

struct ResidualSpec {
  OperatorId op;
  DatasetMode mode = DatasetMode::Forward;
  KTransform k_transform = KTransform::Direct;
  double k_shift = 0.0;
  int u_head = 0;
  int k_head = 1;
};

/// Interior-operator residual at one point from physical-field bundles.
/// k_physical carries the coefficient field itself (value and slope), not the
/// raw head output.
double apply_operator(const OperatorId& op, const EvalBundle& u,
                      const EvalBundle* k_physical,
                      const Eigen::RowVectorXd& x);

/// Derivatives of apply_operator with respect to the bundle entries.
struct OperatorAdjoint {
  double a_u = 0.0;
  Vector g_u;  // d residual / d u.grad_x
  Vector h_u;  // d residual / d u.hess_diag
  double a_k = 0.0;
  Vector g_k;  // d residual / d k.grad_x (physical k)
};
OperatorAdjoint operator_adjoint(const OperatorId& op, const EvalBundle& u,
                                 const EvalBundle* k_physical);

enum class FieldKind { Solution, Parameter, ParameterLatent, Residual };

/// Maps network evaluations to the residual vector whose blocks mirror the
/// snapshot rows ([F | G | K] forward, [F | G | U] inverse), and pulls
/// adjoint vectors back to parameter gradients.
class ResidualModel {
 public:
  ResidualModel(ResidualSpec spec, SensorLayout layout,
                std::shared_ptr<const FfnModel> model);

  const ResidualSpec& spec() const { return spec_; }
  const SensorLayout& layout() const { return layout_; }
  const FfnModel& model() const { return *model_; }
  std::shared_ptr<const FfnModel> model_ptr() const { return model_; }

  Eigen::Index n_f() const { return layout_.f_sensors.rows(); }
  Eigen::Index n_g() const { return layout_.g_sensors.rows(); }
  Eigen::Index n_tail() const;
  Eigen::Index length() const { return n_f() + n_g() + n_tail(); }

  struct Eval {
    Vector r;
    HeadBatch u_f;          // u bundles at f sensors
    HeadBatch k_f;          // raw parameter head at f sensors (if used)
    Vector k_exp_f;         // exp(raw head) at f sensors (ShiftExp chain)
    HeadBatch u_g;          // trace values at g sensors
    HeadBatch tail;         // value batch backing the tail block
    Vector tail_exp;        // exp(raw head) at tail sensors (forward ShiftExp)
  };

  Eval evaluate(const Vector& theta) const;
  Vector residual(const Vector& theta) const { return evaluate(theta).r; }

  /// Gradient of <adjoint, residual(theta)>.
  Vector pullback(const Eval& ev, const Vector& theta,
                  const Vector& adjoint) const;

  /// Field evaluation on an arbitrary point set for one parameter sample.
  Vector field_values(const Vector& theta, const Matrix& grid,
                      FieldKind kind) const;

 private:
  DerivOrder f_order_u() const;
  EvalBundle physical_k(const HeadBatch& k_batch, const Vector& k_exp,
                        Eigen::Index p) const;

  ResidualSpec spec_;
  SensorLayout layout_;
  std::shared_ptr<const FfnModel> model_;
};

}  // namespace spde
