#include "rigfield/skin_field.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rigfield/error.hpp"

namespace rigfield {

AffineLift AffineLift::identity(int dim) {
  return {Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

Eigen::MatrixXd AffineLift::apply_rows(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd out = rows * weight.transpose();
  out.rowwise() += bias.transpose();
  return out;
}

void validate(const SkinEmbeddings& emb) {
  require(emb.channels >= 1 && emb.lifted_dim >= 1, "embedding dimensions must be positive");
  require(emb.joint_embeddings.rows() >= 1, "at least one joint embedding is required");
  require(emb.vertex_embeddings.rows() >= 1, "at least one vertex embedding is required");
  require(emb.joint_embeddings.cols() == emb.channels && emb.vertex_embeddings.cols() == emb.channels,
          "embedding channel count mismatch");
  require(emb.temperatures.size() == emb.vertex_embeddings.rows(), "one temperature per vertex is required");
  require((emb.temperatures.array() > 0.0).all() && emb.temperatures.allFinite(), "temperatures must be positive");
  for (const AffineLift* lift : {&emb.lift_joint, &emb.lift_vertex})
    require(lift->weight.rows() == emb.lifted_dim && lift->weight.cols() == emb.channels &&
                lift->bias.size() == emb.lifted_dim,
            "lift shape does not match C -> D");
}

Eigen::MatrixXd encode_vertex_embeddings(const Eigen::MatrixXd& joint_embeddings, const SkinWeights& skin) {
  require(skin.joint_count == joint_embeddings.rows(), "skin joint count differs from joint embedding count");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(skin.vertex_count()), joint_embeddings.cols());
  for (std::size_t v = 0; v < skin.vertex_count(); ++v)
    for (const Influence& inf : skin.entries[v])
      out.row(static_cast<Eigen::Index>(v)) += inf.weight * joint_embeddings.row(inf.joint);
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r).array() -= out.row(r).maxCoeff();
    out.row(r) = out.row(r).array().exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Eigen::MatrixXd decode_skin_dense(const SkinEmbeddings& emb) {
  validate(emb);
  const Eigen::MatrixXd lifted_v = emb.lift_vertex.apply_rows(emb.vertex_embeddings);
  const Eigen::MatrixXd lifted_j = emb.lift_joint.apply_rows(emb.joint_embeddings);
  Eigen::MatrixXd logits = lifted_v * lifted_j.transpose();
  logits.array().colwise() /= emb.temperatures.array();
  return softmax_rows(logits);
}

SkinWeights decode_skin(const SkinEmbeddings& emb) {
  const Eigen::MatrixXd w = decode_skin_dense(emb);
  SkinWeights skin;
  skin.joint_count = static_cast<int>(w.cols());
  skin.entries.resize(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index v = 0; v < w.rows(); ++v)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      skin.entries[static_cast<std::size_t>(v)].push_back({static_cast<int>(j), w(v, j)});
  return skin;
}

double mean_kl(const Eigen::MatrixXd& target, const Eigen::MatrixXd& pred) {
  require(target.rows() == pred.rows() && target.cols() == pred.cols(), "KL operands differ in shape");
  double total = 0.0;
  for (Eigen::Index r = 0; r < target.rows(); ++r)
    for (Eigen::Index c = 0; c < target.cols(); ++c) {
      const double t = target(r, c);
      if (t > 0.0) total += t * (std::log(t) - std::log(pred(r, c)));
    }
  return target.rows() > 0 ? total / static_cast<double>(target.rows()) : 0.0;
}

void validate(const FitConfig& config) {
  require(config.channels >= 1, "fit channels must be positive");
  require(config.identity_lift || config.lifted_dim >= 1, "fit lifted dimension must be positive");
  require(config.iterations >= 0, "fit iterations must be non-negative");
  require(config.learning_rate > 0.0 && std::isfinite(config.learning_rate), "learning rate must be positive");
  require(config.clip_norm > 0.0, "gradient clip norm must be positive");
}

double FitGradient::squared_norm(bool include_lifts) const {
  double s = joint_embeddings.squaredNorm() + log_temperature.squaredNorm();
  if (include_lifts)
    s += lift_joint_weight.squaredNorm() + lift_vertex_weight.squaredNorm() + lift_joint_bias.squaredNorm() +
         lift_vertex_bias.squaredNorm();
  return s;
}

double fit_objective(const FitParameters& params, const Eigen::MatrixXd& target, FitGradient* grad) {
  const Eigen::MatrixXd& wj = params.joint_embeddings;
  const Eigen::MatrixXd wv = target * wj;
  const Eigen::MatrixXd lifted_j = params.lift_joint.apply_rows(wj);
  const Eigen::MatrixXd lifted_v = params.lift_vertex.apply_rows(wv);
  const Eigen::VectorXd inv_t = (-params.log_temperature.array()).exp();

  Eigen::MatrixXd logits = lifted_v * lifted_j.transpose();
  logits.array().colwise() *= inv_t.array();
  const Eigen::MatrixXd q = softmax_rows(logits);
  const double loss = mean_kl(target, q);
  if (!grad) return loss;

  const double nv = static_cast<double>(target.rows());
  const Eigen::MatrixXd d_logits = (q - target) / nv;
  grad->log_temperature = -(d_logits.array() * logits.array()).rowwise().sum().matrix();

  Eigen::MatrixXd d_raw = d_logits;
  d_raw.array().colwise() *= inv_t.array();
  const Eigen::MatrixXd d_lifted_v = d_raw * lifted_j;             // Nv x D
  const Eigen::MatrixXd d_lifted_j = d_raw.transpose() * lifted_v;  // Nj x D

  grad->lift_vertex_weight = d_lifted_v.transpose() * wv;
  grad->lift_vertex_bias = d_lifted_v.colwise().sum().transpose();
  grad->lift_joint_weight = d_lifted_j.transpose() * wj;
  grad->lift_joint_bias = d_lifted_j.colwise().sum().transpose();

  const Eigen::MatrixXd d_wv = d_lifted_v * params.lift_vertex.weight;
  grad->joint_embeddings = d_lifted_j * params.lift_joint.weight + target.transpose() * d_wv;
  return loss;
}

FitResult fit_skin_embeddings(const SkinWeights& skin, const Skeleton& skeleton, const FitConfig& config) {
  validate(config);
  validate(skin);
  require(skin.joint_count == static_cast<int>(skeleton.size()), "skin joint count differs from skeleton");
  require(skin.joint_count >= 1 && skin.vertex_count() >= 1, "fit needs at least one joint and one vertex");

  const int c = config.channels;
  const int d = config.identity_lift ? c : config.lifted_dim;
  const Eigen::MatrixXd target = skin.dense();
  const auto nj = static_cast<Eigen::Index>(skin.joint_count);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
    return m;
  };

  FitParameters params;
  // Joint embeddings start from joint positions so nearby joints begin close.
  params.joint_embeddings = gaussian(nj, c, 0.5);
  for (Eigen::Index i = 0; i < nj; ++i)
    for (int a = 0; a < std::min(c, 3); ++a) params.joint_embeddings(i, a) += 2.0 * skeleton.joints[i][a];
  if (config.identity_lift) {
    params.lift_joint = params.lift_vertex = AffineLift::identity(c);
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    params.lift_joint = {gaussian(d, c, scale), Eigen::VectorXd::Zero(d)};
    params.lift_vertex = {gaussian(d, c, scale), Eigen::VectorXd::Zero(d)};
  }
  params.log_temperature = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(skin.vertex_count()));

  const bool train_lifts = !config.identity_lift;
  FitGradient grad;
  double loss = fit_objective(params, target, &grad);
  int it = 0;
  for (; it < config.iterations && loss >= config.target_loss; ++it) {
    const double norm = std::sqrt(grad.squared_norm(train_lifts));
    if (!std::isfinite(norm)) throw Error(ErrorKind::Numeric, "skin fit gradient is not finite");
    const double step = config.learning_rate * (norm > config.clip_norm ? config.clip_norm / norm : 1.0);
    params.joint_embeddings -= step * grad.joint_embeddings;
    params.log_temperature -= step * grad.log_temperature;
    if (train_lifts) {
      params.lift_joint.weight -= step * grad.lift_joint_weight;
      params.lift_joint.bias -= step * grad.lift_joint_bias;
      params.lift_vertex.weight -= step * grad.lift_vertex_weight;
      params.lift_vertex.bias -= step * grad.lift_vertex_bias;
    }
    loss = fit_objective(params, target, &grad);
  }

  FitResult result;
  result.iterations_run = it;
  result.final_loss = loss;
  SkinEmbeddings& emb = result.embeddings;
  emb.channels = c;
  emb.lifted_dim = d;
  emb.joint_embeddings = params.joint_embeddings;
  emb.vertex_embeddings = encode_vertex_embeddings(params.joint_embeddings, skin);
  emb.temperatures = params.log_temperature.array().exp();
  emb.lift_joint = params.lift_joint;
  emb.lift_vertex = params.lift_vertex;
  return result;
}

namespace {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(round_sig9(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(round_sig9(v[i]));
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j, Eigen::Index cols, const char* what) {
  require(j.is_array(), std::string(what) + " is not a list");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    require(j[r].is_array() && static_cast<Eigen::Index>(j[r].size()) == cols,
            std::string(what) + " row has the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      require(j[r][c].is_number(), std::string(what) + " entry is not a number");
      m(static_cast<Eigen::Index>(r), c) = j[r][c].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
  require(j.is_array(), std::string(what) + " is not a list");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), std::string(what) + " entry is not a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

Json embeddings_to_json(const SkinEmbeddings& emb) {
  return {{"C", emb.channels},
          {"D", emb.lifted_dim},
          {"joint_embeddings", matrix_to_json(emb.joint_embeddings)},
          {"vertex_embeddings", matrix_to_json(emb.vertex_embeddings)},
          {"temperatures", vector_to_json(emb.temperatures)},
          {"lift_joint", {{"weight", matrix_to_json(emb.lift_joint.weight)}, {"bias", vector_to_json(emb.lift_joint.bias)}}},
          {"lift_vertex",
           {{"weight", matrix_to_json(emb.lift_vertex.weight)}, {"bias", vector_to_json(emb.lift_vertex.bias)}}}};
}

SkinEmbeddings embeddings_from_json(const Json& doc) {
  for (const char* k : {"C", "D", "joint_embeddings", "vertex_embeddings", "temperatures", "lift_joint", "lift_vertex"})
    require(doc.is_object() && doc.contains(k), std::string("embeddings missing key \"") + k + "\"");
  require(doc["C"].is_number_integer() && doc["D"].is_number_integer(), "C and D must be integers");
  SkinEmbeddings emb;
  emb.channels = doc["C"].get<int>();
  emb.lifted_dim = doc["D"].get<int>();
  require(emb.channels >= 1 && emb.lifted_dim >= 1, "embedding dimensions must be positive");
  emb.joint_embeddings = matrix_from_json(doc["joint_embeddings"], emb.channels, "joint_embeddings");
  emb.vertex_embeddings = matrix_from_json(doc["vertex_embeddings"], emb.channels, "vertex_embeddings");
  emb.temperatures = vector_from_json(doc["temperatures"], "temperatures");
  for (auto [key, lift] : {std::pair{"lift_joint", &emb.lift_joint}, std::pair{"lift_vertex", &emb.lift_vertex}}) {
    const Json& j = doc[key];
    require(j.is_object() && j.contains("weight") && j.contains("bias"), std::string(key) + " needs weight and bias");
    lift->weight = matrix_from_json(j["weight"], emb.channels, key);
    lift->bias = vector_from_json(j["bias"], key);
  }
  validate(emb);
  return emb;
}

}  // namespace rigfield
