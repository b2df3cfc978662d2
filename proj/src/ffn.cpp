#include "spde/ffn.hpp"

#include <cmath>
#include <string>

namespace spde {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWMap = Eigen::Map<const RowMat>;
using WMap = Eigen::Map<RowMat>;

Eigen::RowVectorXd col_or_zero(const Matrix& m, Eigen::Index j,
                               Eigen::Index p) {
  if (m.size() == 0) return Eigen::RowVectorXd::Zero(p);
  return m.col(j).transpose();
}

}  // namespace

void FfnModel::finalize() {
  if (arch_.heads.empty()) throw ValidationError("network needs at least one head");
  shapes_.clear();
  total_params_ = 0;
  for (size_t h = 0; h < arch_.heads.size(); ++h) {
    const HeadSpec& spec = arch_.heads[h];
    if (spec.input_dim < 1)
      throw ValidationError("head input dimension must be >= 1");
    if (spec.embeddings.empty())
      throw ValidationError("head needs at least one embedding");
    const int b = spec.embeddings.front().rows;
    for (const EmbeddingSpec& e : spec.embeddings) {
      if (e.rows != b)
        throw ValidationError("all embeddings of a head must share a width");
      if (e.rows < 1) throw ValidationError("embedding width must be >= 1");
      if (e.sigma <= 0) throw ValidationError("embedding scale must be > 0");
    }
    HeadShape shape;
    shape.offset = total_params_;
    int in = 2 * b;
    int at = total_params_;
    for (int w : spec.hidden) {
      if (w < 1) throw ValidationError("hidden width must be >= 1");
      Block blk;
      blk.rows = w;
      blk.cols = in;
      blk.w_offset = at;
      blk.b_offset = at + w * in;
      at = blk.b_offset + w;
      shape.layers.push_back(blk);
      in = w;
    }
    shape.last_width = in;
    const int concat = static_cast<int>(spec.embeddings.size()) * in;
    shape.out.rows = 1;
    shape.out.cols = concat;
    shape.out.w_offset = at;
    shape.out.b_offset = at + concat;
    at = shape.out.b_offset + 1;
    shape.count = at - shape.offset;
    total_params_ = at;
    shapes_.push_back(shape);

    if (embeddings_[h].size() != spec.embeddings.size())
      throw ValidationError("embedding matrix count mismatch");
    for (size_t i = 0; i < embeddings_[h].size(); ++i) {
      const Matrix& B = embeddings_[h][i];
      if (B.rows() != b || B.cols() != spec.input_dim)
        throw DimensionMismatch("embedding matrix has wrong shape");
    }
  }
}

FfnModel::FfnModel(FfnArch arch, const Rng& rng) : arch_(std::move(arch)) {
  const Rng parent = rng.split("embeddings");
  embeddings_.resize(arch_.heads.size());
  for (size_t h = 0; h < arch_.heads.size(); ++h) {
    const Rng head_rng = parent.split(static_cast<std::uint64_t>(h));
    for (size_t i = 0; i < arch_.heads[h].embeddings.size(); ++i) {
      const EmbeddingSpec& e = arch_.heads[h].embeddings[i];
      Rng child = head_rng.split(static_cast<std::uint64_t>(i));
      Matrix B(e.rows, arch_.heads[h].input_dim);
      for (Eigen::Index r = 0; r < B.rows(); ++r)
        for (Eigen::Index c = 0; c < B.cols(); ++c)
          B(r, c) = e.sigma * child.normal();
      embeddings_[h].push_back(std::move(B));
    }
  }
  finalize();
}

FfnModel::FfnModel(FfnArch arch, std::vector<std::vector<Matrix>> embeddings)
    : arch_(std::move(arch)), embeddings_(std::move(embeddings)) {
  if (embeddings_.size() != arch_.heads.size())
    throw ValidationError("one embedding list per head required");
  finalize();
}

int FfnModel::head_offset(int head) const {
  return shapes_.at(static_cast<size_t>(head)).offset;
}

int FfnModel::head_param_count(int head) const {
  return shapes_.at(static_cast<size_t>(head)).count;
}

const Matrix& FfnModel::embedding_matrix(int head, int i) const {
  if (head < 0 || head >= head_count())
    throw IndexOutOfRange("head index out of range");
  const auto& list = embeddings_[static_cast<size_t>(head)];
  if (i < 0 || static_cast<size_t>(i) >= list.size())
    throw IndexOutOfRange("embedding index out of range");
  return list[static_cast<size_t>(i)];
}

void FfnModel::check_theta(const Vector& theta) const {
  if (theta.size() != total_params_)
    throw DimensionMismatch("theta has length " + std::to_string(theta.size()) +
                            ", expected " + std::to_string(total_params_));
}

Vector FfnModel::embed(int head, int emb_index, const Vector& x) const {
  const Matrix& B = embedding_matrix(head, emb_index);
  if (x.size() != B.cols())
    throw DimensionMismatch("embed: point has wrong dimension");
  const Vector ang = B * x;
  Vector out(2 * ang.size());
  out.head(ang.size()) = ang.array().cos();
  out.tail(ang.size()) = ang.array().sin();
  return out;
}

HeadBatch FfnModel::eval_batch(int head, const Vector& theta,
                               const Matrix& points, DerivOrder order) const {
  check_theta(theta);
  if (head < 0 || head >= head_count())
    throw IndexOutOfRange("head index out of range");
  const HeadSpec& spec = arch_.heads[static_cast<size_t>(head)];
  const HeadShape& shape = shapes_[static_cast<size_t>(head)];
  if (points.cols() != spec.input_dim)
    throw DimensionMismatch("points have wrong spatial dimension");

  const Eigen::Index p = points.rows();
  const int n = spec.input_dim;
  const int n_emb = static_cast<int>(spec.embeddings.size());
  const bool want_grad = order != DerivOrder::Value;
  const bool want_hess = order == DerivOrder::Hess;

  HeadBatch batch;
  batch.order = order;
  batch.x = points;
  batch.trace.resize(static_cast<size_t>(n_emb));

  const Matrix xt = points.transpose();  // n x P

  for (int e = 0; e < n_emb; ++e) {
    const Matrix& B = embeddings_[static_cast<size_t>(head)][static_cast<size_t>(e)];
    const Eigen::Index b = B.rows();
    HeadBatch::EmbTrace& tr = batch.trace[static_cast<size_t>(e)];

    const Matrix ang = B * xt;                 // b x P
    const Matrix cos_a = ang.array().cos().matrix();
    const Matrix sin_a = ang.array().sin().matrix();

    HeadBatch::Level lvl;
    lvl.h.resize(2 * b, p);
    lvl.h.topRows(b) = cos_a;
    lvl.h.bottomRows(b) = sin_a;
    if (want_grad) {
      lvl.d.resize(static_cast<size_t>(n));
      for (int j = 0; j < n; ++j) {
        const Vector beta = B.col(j);
        Matrix d(2 * b, p);
        d.topRows(b) = ((-sin_a.array()).colwise() * beta.array()).matrix();
        d.bottomRows(b) = (cos_a.array().colwise() * beta.array()).matrix();
        lvl.d[static_cast<size_t>(j)] = std::move(d);
      }
    }
    if (want_hess) {
      lvl.s.resize(static_cast<size_t>(n));
      for (int j = 0; j < n; ++j) {
        const Vector beta2 = B.col(j).array().square();
        Vector stacked(2 * b);
        stacked.head(b) = beta2;
        stacked.tail(b) = beta2;
        lvl.s[static_cast<size_t>(j)] =
            ((-lvl.h.array()).colwise() * stacked.array()).matrix();
      }
    }
    tr.levels.push_back(std::move(lvl));

    for (size_t t = 0; t < shape.layers.size(); ++t) {
      const Block& blk = shape.layers[t];
      ConstWMap w(theta.data() + blk.w_offset, blk.rows, blk.cols);
      const auto bias = theta.segment(blk.b_offset, blk.rows);
      const HeadBatch::Level& in = tr.levels.back();

      HeadBatch::LayerCache cache;
      Matrix z = w * in.h;
      z.colwise() += bias;
      cache.cos_z = z.array().cos().matrix();
      cache.sin_z = z.array().sin().matrix();

      HeadBatch::Level out;
      out.h = cache.sin_z;
      if (want_grad) {
        cache.p.resize(static_cast<size_t>(n));
        out.d.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
          cache.p[static_cast<size_t>(j)] = w * in.d[static_cast<size_t>(j)];
          out.d[static_cast<size_t>(j)] =
              cache.cos_z.cwiseProduct(cache.p[static_cast<size_t>(j)]);
        }
      }
      if (want_hess) {
        cache.q.resize(static_cast<size_t>(n));
        out.s.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
          cache.q[static_cast<size_t>(j)] = w * in.s[static_cast<size_t>(j)];
          const Matrix& pj = cache.p[static_cast<size_t>(j)];
          out.s[static_cast<size_t>(j)] =
              cache.cos_z.cwiseProduct(cache.q[static_cast<size_t>(j)]) -
              cache.sin_z.cwiseProduct(pj.cwiseProduct(pj));
        }
      }
      tr.layers.push_back(std::move(cache));
      tr.levels.push_back(std::move(out));
    }
  }

  // Output layer over the concatenated last states.
  const auto w_out = theta.segment(shape.out.w_offset, shape.out.cols);
  const double b_out = theta(shape.out.b_offset);
  batch.value = Vector::Constant(p, b_out);
  if (want_grad) batch.grad = Matrix::Zero(p, n);
  if (want_hess) batch.hess = Matrix::Zero(p, n);
  for (int e = 0; e < n_emb; ++e) {
    const HeadBatch::Level& last = batch.trace[static_cast<size_t>(e)].levels.back();
    const auto seg = w_out.segment(e * shape.last_width, shape.last_width);
    batch.value += last.h.transpose() * seg;
    for (int j = 0; want_grad && j < n; ++j)
      batch.grad.col(j) += last.d[static_cast<size_t>(j)].transpose() * seg;
    for (int j = 0; want_hess && j < n; ++j)
      batch.hess.col(j) += last.s[static_cast<size_t>(j)].transpose() * seg;
  }
  return batch;
}

void FfnModel::backprop(int head, const Vector& theta, const HeadBatch& batch,
                        const BatchAdjoint& adj, Vector& grad) const {
  check_theta(theta);
  if (grad.size() != total_params_)
    throw DimensionMismatch("gradient accumulator has wrong length");
  const HeadSpec& spec = arch_.heads.at(static_cast<size_t>(head));
  const HeadShape& shape = shapes_[static_cast<size_t>(head)];
  const Eigen::Index p = batch.x.rows();
  const int n = spec.input_dim;
  const int n_emb = static_cast<int>(spec.embeddings.size());
  const bool want_grad = batch.order != DerivOrder::Value;
  const bool want_hess = batch.order == DerivOrder::Hess;

  if (adj.a.size() != p)
    throw DimensionMismatch("adjoint value weights have wrong length");
  if (!want_grad && adj.g.size() != 0)
    throw DimensionMismatch("gradient adjoints supplied for a value-only batch");
  if (!want_hess && adj.h.size() != 0)
    throw DimensionMismatch("hessian adjoints supplied without hessian states");

  const Eigen::RowVectorXd abar = adj.a.transpose();
  const auto w_out = theta.segment(shape.out.w_offset, shape.out.cols);

  grad(shape.out.b_offset) += adj.a.sum();

  for (int e = 0; e < n_emb; ++e) {
    const HeadBatch::EmbTrace& tr = batch.trace[static_cast<size_t>(e)];
    const HeadBatch::Level& last = tr.levels.back();
    const auto seg = w_out.segment(e * shape.last_width, shape.last_width);

    // Output weight gradient for this embedding's slice.
    auto wbar_out = grad.segment(shape.out.w_offset + e * shape.last_width,
                                 shape.last_width);
    wbar_out += last.h * adj.a;

    Matrix hbar = seg * abar;  // last_width x P
    std::vector<Matrix> dbar(static_cast<size_t>(n)), sbar(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      if (want_grad) {
        const Eigen::RowVectorXd gbar = col_or_zero(adj.g, j, p);
        wbar_out += last.d[static_cast<size_t>(j)] * gbar.transpose();
        dbar[static_cast<size_t>(j)] = seg * gbar;
      }
      if (want_hess) {
        const Eigen::RowVectorXd hbar_j = col_or_zero(adj.h, j, p);
        wbar_out += last.s[static_cast<size_t>(j)] * hbar_j.transpose();
        sbar[static_cast<size_t>(j)] = seg * hbar_j;
      }
    }

    for (int t = static_cast<int>(shape.layers.size()) - 1; t >= 0; --t) {
      const Block& blk = shape.layers[static_cast<size_t>(t)];
      ConstWMap w(theta.data() + blk.w_offset, blk.rows, blk.cols);
      const HeadBatch::LayerCache& cache = tr.layers[static_cast<size_t>(t)];
      const HeadBatch::Level& in = tr.levels[static_cast<size_t>(t)];

      Matrix zbar = cache.cos_z.cwiseProduct(hbar);
      std::vector<Matrix> pbar(static_cast<size_t>(n)), qbar(static_cast<size_t>(n));
      for (int j = 0; j < n; ++j) {
        if (want_grad) {
          const Matrix& pj = cache.p[static_cast<size_t>(j)];
          zbar -= cache.sin_z.cwiseProduct(pj.cwiseProduct(dbar[static_cast<size_t>(j)]));
          pbar[static_cast<size_t>(j)] =
              cache.cos_z.cwiseProduct(dbar[static_cast<size_t>(j)]);
        }
        if (want_hess) {
          const Matrix& pj = cache.p[static_cast<size_t>(j)];
          const Matrix& qj = cache.q[static_cast<size_t>(j)];
          const Matrix& sb = sbar[static_cast<size_t>(j)];
          zbar -= (cache.cos_z.cwiseProduct(pj.cwiseProduct(pj)) +
                   cache.sin_z.cwiseProduct(qj))
                      .cwiseProduct(sb);
          pbar[static_cast<size_t>(j)] -=
              2.0 * cache.sin_z.cwiseProduct(pj.cwiseProduct(sb));
          qbar[static_cast<size_t>(j)] = cache.cos_z.cwiseProduct(sb);
        }
      }

      WMap wbar(grad.data() + blk.w_offset, blk.rows, blk.cols);
      wbar += zbar * in.h.transpose();
      grad.segment(blk.b_offset, blk.rows) += zbar.rowwise().sum();
      Matrix hbar_next = w.transpose() * zbar;
      for (int j = 0; j < n; ++j) {
        if (want_grad) {
          wbar += pbar[static_cast<size_t>(j)] * in.d[static_cast<size_t>(j)].transpose();
          dbar[static_cast<size_t>(j)] = w.transpose() * pbar[static_cast<size_t>(j)];
        }
        if (want_hess) {
          wbar += qbar[static_cast<size_t>(j)] * in.s[static_cast<size_t>(j)].transpose();
          sbar[static_cast<size_t>(j)] = w.transpose() * qbar[static_cast<size_t>(j)];
        }
      }
      hbar = std::move(hbar_next);
    }
  }
}

Vector FfnModel::forward(const Vector& theta, const Vector& x) const {
  Vector out(head_count());
  for (int h = 0; h < head_count(); ++h) out(h) = forward1(h, theta, x);
  return out;
}

double FfnModel::forward1(int head, const Vector& theta, const Vector& x) const {
  Matrix pt(1, x.size());
  pt.row(0) = x.transpose();
  return eval_batch(head, theta, pt, DerivOrder::Value).value(0);
}

EvalBundle FfnModel::eval_bundle(int head, const Vector& theta,
                                 const Vector& x) const {
  Matrix pt(1, x.size());
  pt.row(0) = x.transpose();
  const HeadBatch b = eval_batch(head, theta, pt, DerivOrder::Hess);
  EvalBundle out;
  out.value = b.value(0);
  out.grad_x = b.grad.row(0).transpose();
  out.hess_diag = b.hess.row(0).transpose();
  return out;
}

json FfnModel::to_json() const {
  json j;
  json heads = json::array();
  for (size_t h = 0; h < arch_.heads.size(); ++h) {
    const HeadSpec& s = arch_.heads[h];
    json hj;
    hj["input_dim"] = s.input_dim;
    json embs = json::array();
    for (size_t i = 0; i < s.embeddings.size(); ++i) {
      json ej;
      ej["rows"] = s.embeddings[i].rows;
      ej["sigma"] = s.embeddings[i].sigma;
      ej["matrix"] = matrix_to_json(embeddings_[h][i]);
      embs.push_back(std::move(ej));
    }
    hj["embeddings"] = std::move(embs);
    hj["hidden"] = s.hidden;
    heads.push_back(std::move(hj));
  }
  j["heads"] = std::move(heads);
  return j;
}

FfnModel FfnModel::from_json(const json& j) {
  FfnArch arch;
  std::vector<std::vector<Matrix>> mats;
  for (const auto& hj : j.at("heads")) {
    HeadSpec s;
    s.input_dim = hj.at("input_dim").get<int>();
    std::vector<Matrix> head_mats;
    for (const auto& ej : hj.at("embeddings")) {
      EmbeddingSpec e;
      e.rows = ej.at("rows").get<int>();
      e.sigma = ej.at("sigma").get<double>();
      s.embeddings.push_back(e);
      head_mats.push_back(matrix_from_json(ej.at("matrix")));
    }
    s.hidden = hj.at("hidden").get<std::vector<int>>();
    arch.heads.push_back(std::move(s));
    mats.push_back(std::move(head_mats));
  }
  return FfnModel(std::move(arch), std::move(mats));
}

}  // namespace spde
