#include "tattnet/attention_export.hpp"

#include <cstdio>

#include "tattnet/errors.hpp"
#include "tattnet/text_io.hpp"

namespace tattnet {

AttentionBundle capture_attention(ModelParams& model, const PatientJourney& journey) {
  check_compatible(model.config, journey);
  Tape tape;
  ForwardOptions opts;
  opts.apply_observation_mask = true;
  const ForwardTrace trace = forward(tape, model, journey, opts);
  AttentionBundle b;
  for (const Var& x : trace.xi) b.xi.push_back(x.value());
  if (trace.short_term) b.alpha = trace.short_term->alpha.value();
  if (trace.long_term) b.p = trace.long_term->weights.value();
  b.beta = trace.pool.beta.value();
  return b;
}

namespace {

std::string numbered(const char* prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%zu", prefix, k);
  return buf;
}

std::string matrix_csv(const std::string& corner, const std::vector<std::string>& col_names,
                       const std::vector<std::string>& row_names, std::size_t rows, std::size_t cols,
                       const auto& at) {
  std::string out = corner;
  for (const std::string& c : col_names) out += ',' + c;
  out += '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    out += row_names[i];
    for (std::size_t j = 0; j < cols; ++j) {
      out += ',';
      append_real(out, at(i, j));
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> labels(const char* prefix, std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t k = 0; k < n; ++k) v.push_back(numbered(prefix, k));
  return v;
}

}  // namespace

std::vector<std::filesystem::path> write_attention(const AttentionBundle& b, const std::filesystem::path& out_dir,
                                                   const std::vector<std::string>& feature_names) {
  const std::size_t T = b.beta.cols();
  std::size_t N = 0;
  if (!b.xi.empty()) N = b.xi.front().rows();
  else if (b.alpha) N = b.alpha->rows();
  else if (b.p) N = b.p->dim(0);
  std::vector<std::string> features = feature_names.empty() ? labels("f", N) : feature_names;
  if (features.size() != N) throw DataError("feature name count does not match the model");
  const std::vector<std::string> visits = labels("v", T);

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const std::filesystem::path path = out_dir / name;
    write_text_file(path, content);
    written.push_back(path);
  };

  for (std::size_t k = 0; k < b.xi.size(); ++k) {
    const Tensor& xi = b.xi[k];
    emit(numbered("xi_head", k) + ".csv",
         matrix_csv("feature", features, features, N, N, [&xi](std::size_t i, std::size_t j) { return xi(i, j); }));
  }
  if (b.alpha) {
    const Tensor& a = *b.alpha;
    emit("alpha.csv", matrix_csv("feature", visits, features, N, T, [&a](std::size_t i, std::size_t j) { return a(i, j); }));
  }
  if (b.p) {
    const Tensor& p = *b.p;
    for (std::size_t target = 0; target < T; ++target) {
      emit(numbered("p_target", target) + ".csv",
           matrix_csv("feature", visits, features, N, T,
                      [&p, target](std::size_t l, std::size_t source) { return p(l, source, target); }));
    }
  }
  const Tensor& beta = b.beta;
  emit("beta.csv", matrix_csv("unit", visits, labels("u", beta.rows()), beta.rows(), T,
                              [&beta](std::size_t i, std::size_t j) { return beta(i, j); }));
  return written;
}

std::vector<std::filesystem::path> export_attention(ModelParams& model, const PatientJourney& journey,
                                                    const std::filesystem::path& out_dir,
                                                    const std::vector<std::string>& feature_names) {
  return write_attention(capture_attention(model, journey), out_dir, feature_names);
}

}  // namespace tattnet
