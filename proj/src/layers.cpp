#include "hyper3d/layers.hpp"

namespace hyper3d {

namespace F = torch::nn::functional;

int64_t group_count(int64_t channels) {
  for (int64_t g : {8, 4, 2}) {
    if (channels % g == 0) return g;
  }
  return 1;
}

AttentionImpl::AttentionImpl(int64_t dim, int64_t heads, int64_t head_dim, int64_t kv_dim)
    : heads_(heads), head_dim_(head_dim) {
  const int64_t inner = heads * head_dim;
  q_ = register_module("q", torch::nn::Linear(torch::nn::LinearOptions(dim, inner).bias(false)));
  k_ = register_module("k", torch::nn::Linear(torch::nn::LinearOptions(kv_dim, inner).bias(false)));
  v_ = register_module("v", torch::nn::Linear(torch::nn::LinearOptions(kv_dim, inner).bias(false)));
  out_ = register_module("out", torch::nn::Linear(inner, dim));
}

torch::Tensor AttentionImpl::forward(const torch::Tensor& x, const torch::Tensor& context) {
  const int64_t B = x.size(0), N = x.size(1), M = context.size(1);
  auto split = [&](const torch::Tensor& t, int64_t len) { return t.view({B, len, heads_, head_dim_}).transpose(1, 2); };
  const auto q = split(q_(x), N);
  const auto k = split(k_(context), M);
  const auto v = split(v_(context), M);
  const auto o = at::scaled_dot_product_attention(q, k, v);
  return out_(o.transpose(1, 2).reshape({B, N, heads_ * head_dim_}));
}

FeedForwardImpl::FeedForwardImpl(int64_t dim, int64_t mult) {
  fc1_ = register_module("fc1", torch::nn::Linear(dim, dim * mult));
  fc2_ = register_module("fc2", torch::nn::Linear(dim * mult, dim));
}

torch::Tensor FeedForwardImpl::forward(const torch::Tensor& x) { return fc2_(F::gelu(fc1_(x))); }

SelfAttentionLayerImpl::SelfAttentionLayerImpl(int64_t dim, int64_t heads, int64_t head_dim, int64_t ff_mult) {
  norm1_ = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attn_ = register_module("attn", Attention(dim, heads, head_dim, dim));
  norm2_ = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  ff_ = register_module("ff", FeedForward(dim, ff_mult));
}

torch::Tensor SelfAttentionLayerImpl::forward(const torch::Tensor& x) {
  auto h = norm1_(x);
  auto y = x + attn_(h, h);
  return y + ff_(norm2_(y));
}

CrossSelfBlockImpl::CrossSelfBlockImpl(int64_t dim, int64_t heads, int64_t head_dim, int64_t ff_mult) {
  norm_q_ = register_module("norm_q", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm_kv_ = register_module("norm_kv", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  cross_ = register_module("cross", Attention(dim, heads, head_dim, dim));
  norm_ff_ = register_module("norm_ff", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  ff_ = register_module("ff", FeedForward(dim, ff_mult));
  self_ = register_module("self", SelfAttentionLayer(dim, heads, head_dim, ff_mult));
}

torch::Tensor CrossSelfBlockImpl::forward(const torch::Tensor& tokens, const torch::Tensor& points) {
  auto y = tokens + cross_(norm_q_(tokens), norm_kv_(points));
  y = y + ff_(norm_ff_(y));
  return self_(y);
}

ResBlockImpl::ResBlockImpl(int64_t channels, int dims) : dims_(dims) {
  const int64_t g = group_count(channels);
  norm1_ = register_module("norm1", torch::nn::GroupNorm(g, channels));
  norm2_ = register_module("norm2", torch::nn::GroupNorm(g, channels));
  if (dims == 2) {
    conv1_ = torch::nn::AnyModule(register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1))));
    conv2_ = torch::nn::AnyModule(register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1))));
  } else {
    conv1_ = torch::nn::AnyModule(register_module("conv1", torch::nn::Conv3d(torch::nn::Conv3dOptions(channels, channels, 3).padding(1))));
    conv2_ = torch::nn::AnyModule(register_module("conv2", torch::nn::Conv3d(torch::nn::Conv3dOptions(channels, channels, 3).padding(1))));
  }
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  auto h = conv1_.forward(F::silu(norm1_(x)));
  h = conv2_.forward(F::silu(norm2_(h)));
  return x + h;
}

}  // namespace hyper3d
