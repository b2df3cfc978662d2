#pragma once

#include <vector>

#include "spde/io.hpp"
#include "spde/linalg.hpp"

namespace spde {

/// One Fourier feature embedding: x -> [cos(Bx); sin(Bx)] with a frozen
/// Gaussian matrix B (b rows, entries N(0, sigma^2)).
struct EmbeddingSpec {
  int rows = 1;        // b
  double sigma = 1.0;  // scale of the frozen matrix entries
};

/// One network head: several embeddings of the same width feeding a shared
/// sine-activated stack; the last hidden states of all embeddings are
/// concatenated into a single affine output. An empty hidden list is the
/// degenerate configuration where the output layer reads the embedding
/// directly (useful for exact closed-form networks in tests).
struct HeadSpec {
  int input_dim = 1;
  std::vector<EmbeddingSpec> embeddings;
  std::vector<int> hidden;
};

/// Heads own disjoint parameter blocks; theta is their concatenation.
struct FfnArch {
  std::vector<HeadSpec> heads;
};

enum class DerivOrder { Value = 0, Grad = 1, Hess = 2 };

struct EvalBundle {
  double value = 0.0;
  Vector grad_x;     // dU/dx_j
  Vector hess_diag;  // d2U/dx_j^2
};

/// Batched head evaluation over a point set, including the state caches the
/// reverse pass needs.
struct HeadBatch {
  DerivOrder order = DerivOrder::Value;
  Matrix x;      // P x n
  Vector value;  // P
  Matrix grad;   // P x n
  Matrix hess;   // P x n

  struct Level {
    Matrix h;                // state value (width x P)
    std::vector<Matrix> d;   // per-coordinate first-derivative state
    std::vector<Matrix> s;   // per-coordinate second-derivative state
  };
  struct LayerCache {
    Matrix cos_z, sin_z;     // activation trig at the pre-activation
    std::vector<Matrix> p;   // W * d_in per coordinate
    std::vector<Matrix> q;   // W * s_in per coordinate
  };
  struct EmbTrace {
    std::vector<Level> levels;      // T+1 entries; level 0 is the embedding
    std::vector<LayerCache> layers; // T entries
  };
  std::vector<EmbTrace> trace;  // one per embedding
};

/// Adjoint weights for a batch: the scalar loss is
///   sum_p a(p) value(p) + sum_{p,j} g(p,j) grad(p,j) + h(p,j) hess(p,j).
struct BatchAdjoint {
  Vector a;  // P
  Matrix g;  // P x n (may be empty when unused)
  Matrix h;  // P x n
};

/// Multiscale Fourier feature network with frozen embedding matrices and a
/// flat trainable parameter vector. Parameter layout per head: for each
/// hidden layer W (row-major), then its bias; finally the output row and
/// output bias. Heads are laid out consecutively.
class FfnModel {
 public:
  FfnModel(FfnArch arch, const Rng& rng);

  /// Construction with explicit embedding matrices (tests, deserialization).
  FfnModel(FfnArch arch, std::vector<std::vector<Matrix>> embeddings);

  const FfnArch& arch() const { return arch_; }
  int head_count() const { return static_cast<int>(arch_.heads.size()); }
  int param_count() const { return total_params_; }
  int head_offset(int head) const;
  int head_param_count(int head) const;
  int input_dim(int head) const { return arch_.heads[head].input_dim; }
  const Matrix& embedding_matrix(int head, int i) const;

  Vector embed(int head, int emb_index, const Vector& x) const;

  /// Values of every head at one point.
  Vector forward(const Vector& theta, const Vector& x) const;
  double forward1(int head, const Vector& theta, const Vector& x) const;

  EvalBundle eval_bundle(int head, const Vector& theta, const Vector& x) const;

  HeadBatch eval_batch(int head, const Vector& theta, const Matrix& points,
                       DerivOrder order) const;

  /// Accumulates d(loss)/d(theta) for the adjoint-weighted batch loss into
  /// grad (full parameter length; only this head's block is touched).
  void backprop(int head, const Vector& theta, const HeadBatch& batch,
                const BatchAdjoint& adj, Vector& grad) const;

  json to_json() const;
  static FfnModel from_json(const json& j);

 private:
  struct Block {
    int rows = 0, cols = 0;
    int w_offset = 0, b_offset = 0;  // within theta
  };
  struct HeadShape {
    int offset = 0;       // first parameter of the head
    int count = 0;        // parameters in the head
    std::vector<Block> layers;
    Block out;
    int last_width = 0;   // width entering the output concat (per embedding)
  };

  void finalize();
  void check_theta(const Vector& theta) const;

  FfnArch arch_;
  std::vector<std::vector<Matrix>> embeddings_;  // [head][embedding] b x n
  std::vector<HeadShape> shapes_;
  int total_params_ = 0;
};

}  // namespace spde
