#pragma once

#include "sonalign/matrix.hpp"

namespace sonalign::contrastive {

struct InfoNceConfig {
  double temperature = 0.07;
  // false: code anchors against in-batch audio candidates only.
  // true: additionally averages the transposed (audio anchor) direction.
  bool symmetric = false;

  void validate() const;  // temperature must be > 0
};

// S[i][j] = cos(code_i, audio_j); inputs must share both dimensions and have
// no zero-norm rows.
Mat cosine_sim_matrix(const Mat& code, const Mat& audio);

// Mean over anchors of -log softmax(S[i][:] / tau)[i], evaluated with a
// max-shifted log-sum-exp.
double infonce_loss(const Mat& sim, const InfoNceConfig& cfg);

// d loss / d S: (softmax(S/tau) - I) / (n * tau) per row; symmetric mode
// averages with the transposed direction.
Mat infonce_grad(const Mat& sim, const InfoNceConfig& cfg);

struct CosineBackward {
  Mat d_code;
  Mat d_audio;
};

// Chain rule through cosine_sim_matrix: given d loss / d S, returns the
// gradients with respect to the raw (unnormalized) inputs.
CosineBackward cosine_sim_backward(const Mat& code, const Mat& audio, const Mat& d_sim);

}  // namespace sonalign::contrastive
