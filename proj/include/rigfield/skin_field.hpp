#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "rigfield/rig_io.hpp"

namespace rigfield {

/// x -> weight * x + bias, mapping C-dim embeddings into the D-dim
/// compatibility space.
struct AffineLift {
  Eigen::MatrixXd weight;  // D x C
  Eigen::VectorXd bias;    // D

  static AffineLift identity(int dim);
  /// Applies the lift to every row of `rows` (N x C -> N x D).
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
};

/// Joint-count agnostic skin factorization: C-channel joint and vertex
/// embeddings, per-vertex temperatures, and the two lifts.
struct SkinEmbeddings {
  int channels = 4;
  int lifted_dim = 64;
  Eigen::MatrixXd joint_embeddings;   // Nj x C
  Eigen::MatrixXd vertex_embeddings;  // Nv x C
  Eigen::VectorXd temperatures;       // Nv, all > 0
  AffineLift lift_joint;
  AffineLift lift_vertex;
};

void validate(const SkinEmbeddings& emb);

/// Skin-weighted average of joint embeddings per vertex (Nv x C).
Eigen::MatrixXd encode_vertex_embeddings(const Eigen::MatrixXd& joint_embeddings, const SkinWeights& skin);

/// Softmax over joints of <lifted vertex, lifted joint> / temperature, as a
/// dense Nv x Nj matrix.
Eigen::MatrixXd decode_skin_dense(const SkinEmbeddings& emb);
SkinWeights decode_skin(const SkinEmbeddings& emb);

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Mean over rows of KL(target || pred); zero-probability targets contribute 0.
double mean_kl(const Eigen::MatrixXd& target, const Eigen::MatrixXd& pred);

struct FitConfig {
  int channels = 4;
  int lifted_dim = 64;
  bool identity_lift = false;  // forces lifted_dim == channels and freezes the lifts
  int iterations = 5000;
  double learning_rate = 0.5;
  double clip_norm = 1.0;
  double target_loss = 0.0;  // stop once the loss drops below this
  std::uint64_t seed = 0;
};

void validate(const FitConfig& config);

/// Trainable state of the fit. Temperatures are exp(log_temperature).
struct FitParameters {
  Eigen::MatrixXd joint_embeddings;
  AffineLift lift_joint;
  AffineLift lift_vertex;
  Eigen::VectorXd log_temperature;
};

struct FitGradient {
  Eigen::MatrixXd joint_embeddings;
  Eigen::MatrixXd lift_joint_weight, lift_vertex_weight;
  Eigen::VectorXd lift_joint_bias, lift_vertex_bias;
  Eigen::VectorXd log_temperature;

  double squared_norm(bool include_lifts) const;
};

/// Mean KL of the decoded skin against `target` (Nv x Nj) with vertex
/// embeddings tied to the joint embeddings through `target`.
double fit_objective(const FitParameters& params, const Eigen::MatrixXd& target, FitGradient* grad = nullptr);

struct FitResult {
  SkinEmbeddings embeddings;
  double final_loss = 0.0;
  int iterations_run = 0;
};

/// Gradient-descent fit of joint embeddings, lifts and temperatures so that
/// decode_skin reproduces `skin`. Deterministic given the seed.
FitResult fit_skin_embeddings(const SkinWeights& skin, const Skeleton& skeleton, const FitConfig& config);

Json embeddings_to_json(const SkinEmbeddings& emb);
SkinEmbeddings embeddings_from_json(const Json& doc);

}  // namespace rigfield
