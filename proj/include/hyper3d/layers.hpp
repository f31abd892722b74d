#pragma once

#include <torch/torch.h>

namespace hyper3d {

/// Multi-head attention over [B, N, dim] queries and [B, M, kv_dim] context.
class AttentionImpl : public torch::nn::Module {
 public:
  AttentionImpl(int64_t dim, int64_t heads, int64_t head_dim, int64_t kv_dim);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& context);

 private:
  int64_t heads_, head_dim_;
  torch::nn::Linear q_{nullptr}, k_{nullptr}, v_{nullptr}, out_{nullptr};
};
TORCH_MODULE(Attention);

class FeedForwardImpl : public torch::nn::Module {
 public:
  FeedForwardImpl(int64_t dim, int64_t mult);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(FeedForward);

/// Pre-norm self-attention layer: x + Attn(LN x), then x + FF(LN x).
class SelfAttentionLayerImpl : public torch::nn::Module {
 public:
  SelfAttentionLayerImpl(int64_t dim, int64_t heads, int64_t head_dim, int64_t ff_mult);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::LayerNorm norm1_{nullptr}, norm2_{nullptr};
  Attention attn_{nullptr};
  FeedForward ff_{nullptr};
};
TORCH_MODULE(SelfAttentionLayer);

/// Pre-norm cross-attention from tokens to a point set followed by a
/// self-attention layer over the tokens.
class CrossSelfBlockImpl : public torch::nn::Module {
 public:
  CrossSelfBlockImpl(int64_t dim, int64_t heads, int64_t head_dim, int64_t ff_mult);
  torch::Tensor forward(const torch::Tensor& tokens, const torch::Tensor& points);

 private:
  torch::nn::LayerNorm norm_q_{nullptr}, norm_kv_{nullptr}, norm_ff_{nullptr};
  Attention cross_{nullptr};
  FeedForward ff_{nullptr};
  SelfAttentionLayer self_{nullptr};
};
TORCH_MODULE(CrossSelfBlock);

/// Pre-activation residual block: two (GroupNorm, SiLU, 3-wide conv) stages.
/// `dims` selects 2D or 3D convolutions.
class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int64_t channels, int dims);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  int dims_;
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::AnyModule conv1_, conv2_;
};
TORCH_MODULE(ResBlock);

int64_t group_count(int64_t channels);

}  // namespace hyper3d
