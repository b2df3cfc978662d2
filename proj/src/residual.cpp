#include "spde/residual.hpp"

#include <cmath>

namespace spde {

double apply_operator(const OperatorId& op, const EvalBundle& u,
                      const EvalBundle* k_physical,
                      const Eigen::RowVectorXd& /*x*/) {
  switch (op.kind) {
    case OperatorKind::Identity:
      return u.value;
    case OperatorKind::NegLaplace1D:
      return -u.hess_diag(0);
    case OperatorKind::AllenCahn2D:
      return -(u.hess_diag(0) + u.hess_diag(1)) +
             op.cubic_coeff * u.value * (u.value * u.value - 1.0);
    case OperatorKind::DivForm1D:
      if (!k_physical)
        throw MissingParameterField("divergence-form operator needs a k bundle");
      // -(k' u' + k u'')
      return -(k_physical->grad_x(0) * u.grad_x(0) +
               k_physical->value * u.hess_diag(0));
  }
  throw ValidationError("unknown operator kind");
}

OperatorAdjoint operator_adjoint(const OperatorId& op, const EvalBundle& u,
                                 const EvalBundle* k_physical) {
  OperatorAdjoint adj;
  switch (op.kind) {
    case OperatorKind::Identity:
      adj.a_u = 1.0;
      return adj;
    case OperatorKind::NegLaplace1D:
      adj.h_u = Vector::Constant(1, -1.0);
      return adj;
    case OperatorKind::AllenCahn2D:
      adj.a_u = op.cubic_coeff * (3.0 * u.value * u.value - 1.0);
      adj.h_u = Vector::Constant(2, -1.0);
      return adj;
    case OperatorKind::DivForm1D:
      if (!k_physical)
        throw MissingParameterField("divergence-form operator needs a k bundle");
      adj.g_u = Vector::Constant(1, -k_physical->grad_x(0));
      adj.h_u = Vector::Constant(1, -k_physical->value);
      adj.a_k = -u.hess_diag(0);
      adj.g_k = Vector::Constant(1, -u.grad_x(0));
      return adj;
  }
  throw ValidationError("unknown operator kind");
}

ResidualModel::ResidualModel(ResidualSpec spec, SensorLayout layout,
                             std::shared_ptr<const FfnModel> model)
    : spec_(spec), layout_(std::move(layout)), model_(std::move(model)) {
  if (!model_) throw ValidationError("residual model needs a network");
  const int needed_heads =
      (spec_.op.uses_k() || (spec_.mode == DatasetMode::Forward &&
                             layout_.k_sensors.rows() > 0))
          ? std::max(spec_.u_head, spec_.k_head) + 1
          : spec_.u_head + 1;
  if (model_->head_count() < needed_heads)
    throw ValidationError("network does not expose the heads this problem needs");
}

Eigen::Index ResidualModel::n_tail() const {
  return spec_.mode == DatasetMode::Forward ? layout_.k_sensors.rows()
                                            : layout_.u_sensors.rows();
}

DerivOrder ResidualModel::f_order_u() const {
  switch (spec_.op.kind) {
    case OperatorKind::Identity:
      return DerivOrder::Value;
    case OperatorKind::NegLaplace1D:
    case OperatorKind::AllenCahn2D:
    case OperatorKind::DivForm1D:
      return DerivOrder::Hess;
  }
  return DerivOrder::Hess;
}

EvalBundle ResidualModel::physical_k(const HeadBatch& k_batch,
                                     const Vector& k_exp,
                                     Eigen::Index p) const {
  EvalBundle out;
  if (spec_.k_transform == KTransform::ShiftExp) {
    out.value = spec_.k_shift + k_exp(p);
    out.grad_x = Vector::Constant(1, k_exp(p) * k_batch.grad(p, 0));
  } else {
    out.value = k_batch.value(p);
    out.grad_x = Vector::Constant(1, k_batch.grad(p, 0));
  }
  return out;
}

ResidualModel::Eval ResidualModel::evaluate(const Vector& theta) const {
  Eval ev;
  const Eigen::Index nf = n_f();
  const Eigen::Index ng = n_g();
  const Eigen::Index nt = n_tail();
  ev.r.resize(nf + ng + nt);

  ev.u_f = model_->eval_batch(spec_.u_head, theta, layout_.f_sensors,
                              f_order_u());
  const bool needs_k = spec_.op.uses_k();
  if (needs_k) {
    ev.k_f = model_->eval_batch(spec_.k_head, theta, layout_.f_sensors,
                                DerivOrder::Grad);
    if (spec_.k_transform == KTransform::ShiftExp)
      ev.k_exp_f = ev.k_f.value.array().exp().matrix();
  }

  const int n = model_->input_dim(spec_.u_head);
  for (Eigen::Index p = 0; p < nf; ++p) {
    EvalBundle u;
    u.value = ev.u_f.value(p);
    if (ev.u_f.order != DerivOrder::Value) {
      u.grad_x = ev.u_f.grad.row(p).transpose();
      u.hess_diag = ev.u_f.hess.row(p).transpose();
    } else {
      u.grad_x = Vector::Zero(n);
      u.hess_diag = Vector::Zero(n);
    }
    if (needs_k) {
      const EvalBundle k = physical_k(ev.k_f, ev.k_exp_f, p);
      ev.r(p) = apply_operator(spec_.op, u, &k, layout_.f_sensors.row(p));
    } else {
      ev.r(p) = apply_operator(spec_.op, u, nullptr, layout_.f_sensors.row(p));
    }
  }

  if (ng > 0) {
    ev.u_g = model_->eval_batch(spec_.u_head, theta, layout_.g_sensors,
                                DerivOrder::Value);
    ev.r.segment(nf, ng) = ev.u_g.value;
  }

  if (nt > 0) {
    if (spec_.mode == DatasetMode::Forward) {
      ev.tail = model_->eval_batch(spec_.k_head, theta, layout_.k_sensors,
                                   DerivOrder::Value);
      if (spec_.k_transform == KTransform::ShiftExp) {
        ev.tail_exp = ev.tail.value.array().exp().matrix();
        ev.r.tail(nt) = (spec_.k_shift + ev.tail_exp.array()).matrix();
      } else {
        ev.r.tail(nt) = ev.tail.value;
      }
    } else {
      ev.tail = model_->eval_batch(spec_.u_head, theta, layout_.u_sensors,
                                   DerivOrder::Value);
      ev.r.tail(nt) = ev.tail.value;
    }
  }
  return ev;
}

Vector ResidualModel::pullback(const Eval& ev, const Vector& theta,
                               const Vector& adjoint) const {
  if (adjoint.size() != length())
    throw DimensionMismatch("adjoint length does not match the residual");
  const Eigen::Index nf = n_f();
  const Eigen::Index ng = n_g();
  const Eigen::Index nt = n_tail();
  const int n = model_->input_dim(spec_.u_head);
  const bool needs_k = spec_.op.uses_k();
  const bool u_f_has_derivs = ev.u_f.order != DerivOrder::Value;

  Vector grad = Vector::Zero(model_->param_count());

  // F block.
  BatchAdjoint adj_u;
  adj_u.a = Vector::Zero(nf);
  if (u_f_has_derivs) {
    adj_u.g = Matrix::Zero(nf, n);
    adj_u.h = Matrix::Zero(nf, n);
  }
  BatchAdjoint adj_k;
  if (needs_k) {
    adj_k.a = Vector::Zero(nf);
    adj_k.g = Matrix::Zero(nf, 1);
  }
  for (Eigen::Index p = 0; p < nf; ++p) {
    const double lam = adjoint(p);
    if (lam == 0.0) continue;
    EvalBundle u;
    u.value = ev.u_f.value(p);
    if (u_f_has_derivs) {
      u.grad_x = ev.u_f.grad.row(p).transpose();
      u.hess_diag = ev.u_f.hess.row(p).transpose();
    } else {
      u.grad_x = Vector::Zero(n);
      u.hess_diag = Vector::Zero(n);
    }
    EvalBundle k;
    OperatorAdjoint op_adj;
    if (needs_k) {
      k = physical_k(ev.k_f, ev.k_exp_f, p);
      op_adj = operator_adjoint(spec_.op, u, &k);
    } else {
      op_adj = operator_adjoint(spec_.op, u, nullptr);
    }
    adj_u.a(p) += lam * op_adj.a_u;
    if (op_adj.g_u.size() > 0) adj_u.g.row(p) += lam * op_adj.g_u.transpose();
    if (op_adj.h_u.size() > 0) adj_u.h.row(p) += lam * op_adj.h_u.transpose();
    if (needs_k) {
      // Chain through the physical map. ShiftExp: k = shift + exp(kraw),
      // k' = exp(kraw) kraw'.
      if (spec_.k_transform == KTransform::ShiftExp) {
        const double ek = ev.k_exp_f(p);
        const double kraw_grad = ev.k_f.grad(p, 0);
        adj_k.a(p) += lam * (op_adj.a_k * ek + op_adj.g_k(0) * ek * kraw_grad);
        adj_k.g(p, 0) += lam * op_adj.g_k(0) * ek;
      } else {
        adj_k.a(p) += lam * op_adj.a_k;
        adj_k.g(p, 0) += lam * op_adj.g_k(0);
      }
    }
  }
  model_->backprop(spec_.u_head, theta, ev.u_f, adj_u, grad);
  if (needs_k) model_->backprop(spec_.k_head, theta, ev.k_f, adj_k, grad);

  // G block: Dirichlet trace of u.
  if (ng > 0) {
    BatchAdjoint adj_g;
    adj_g.a = adjoint.segment(nf, ng);
    model_->backprop(spec_.u_head, theta, ev.u_g, adj_g, grad);
  }

  // Tail block.
  if (nt > 0) {
    BatchAdjoint adj_t;
    if (spec_.mode == DatasetMode::Forward &&
        spec_.k_transform == KTransform::ShiftExp) {
      adj_t.a = adjoint.tail(nt).cwiseProduct(ev.tail_exp);
      model_->backprop(spec_.k_head, theta, ev.tail, adj_t, grad);
    } else if (spec_.mode == DatasetMode::Forward) {
      adj_t.a = adjoint.tail(nt);
      model_->backprop(spec_.k_head, theta, ev.tail, adj_t, grad);
    } else {
      adj_t.a = adjoint.tail(nt);
      model_->backprop(spec_.u_head, theta, ev.tail, adj_t, grad);
    }
  }
  return grad;
}

Vector ResidualModel::field_values(const Vector& theta, const Matrix& grid,
                                   FieldKind kind) const {
  switch (kind) {
    case FieldKind::Solution:
      return model_->eval_batch(spec_.u_head, theta, grid, DerivOrder::Value)
          .value;
    case FieldKind::ParameterLatent:
      return model_->eval_batch(spec_.k_head, theta, grid, DerivOrder::Value)
          .value;
    case FieldKind::Parameter: {
      const Vector raw =
          model_->eval_batch(spec_.k_head, theta, grid, DerivOrder::Value)
              .value;
      if (spec_.k_transform == KTransform::ShiftExp)
        return (spec_.k_shift + raw.array().exp()).matrix();
      return raw;
    }
    case FieldKind::Residual: {
      const HeadBatch u_b =
          model_->eval_batch(spec_.u_head, theta, grid, f_order_u());
      HeadBatch k_b;
      Vector k_exp;
      const bool needs_k = spec_.op.uses_k();
      if (needs_k) {
        k_b = model_->eval_batch(spec_.k_head, theta, grid, DerivOrder::Grad);
        if (spec_.k_transform == KTransform::ShiftExp)
          k_exp = k_b.value.array().exp().matrix();
      }
      const int n = model_->input_dim(spec_.u_head);
      Vector out(grid.rows());
      for (Eigen::Index p = 0; p < grid.rows(); ++p) {
        EvalBundle u;
        u.value = u_b.value(p);
        if (u_b.order != DerivOrder::Value) {
          u.grad_x = u_b.grad.row(p).transpose();
          u.hess_diag = u_b.hess.row(p).transpose();
        } else {
          u.grad_x = Vector::Zero(n);
          u.hess_diag = Vector::Zero(n);
        }
        if (needs_k) {
          const EvalBundle k = physical_k(k_b, k_exp, p);
          out(p) = apply_operator(spec_.op, u, &k, grid.row(p));
        } else {
          out(p) = apply_operator(spec_.op, u, nullptr, grid.row(p));
        }
      }
      return out;
    }
  }
  throw ValidationError("unknown field kind");
}

}  // namespace spde
