#pragma once

#include <cstddef>

namespace dcast::nn::kernels {

// Inner loops shared by every network in the project. The OpenMP variants
// parallelize over independent output elements only, and every output
// element accumulates its terms in the same index order as the serial
// reference, so the two produce bitwise-identical results at any thread
// count. tests/kernels_test.cpp holds them to that.

/// c[m,n] = a·b (+ c if accumulate). trans_a/trans_b select aT/bT; a and b
/// are given in their stored (untransposed) layout: a is [m,k] or [k,m],
/// b is [k,n] or [n,k]. trans_a && trans_b is unsupported.
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate);

/// Valid (no padding) cross-correlation.
/// x: [batch, len, ch], w: [filters, k, ch], bias: [filters] (may be null),
/// y: [batch, out_len, filters] with out_len = (len - k) / stride + 1.
void conv1d_forward(const double* x, const double* w, const double* bias, double* y,
                    std::size_t batch, std::size_t len, std::size_t ch, std::size_t filters,
                    std::size_t k, std::size_t stride);

/// dx += conv backward wrt input. dx has x's shape and is accumulated into.
void conv1d_backward_input(const double* dy, const double* w, double* dx, std::size_t batch,
                           std::size_t len, std::size_t ch, std::size_t filters, std::size_t k,
                           std::size_t stride);

/// dw += conv backward wrt kernels, dbias += column sums of dy (dbias may be null).
void conv1d_backward_kernels(const double* dy, const double* x, double* dw, double* dbias,
                             std::size_t batch, std::size_t len, std::size_t ch,
                             std::size_t filters, std::size_t k, std::size_t stride);

/// Plain-loop reference implementations, kept for testing and benchmarking.
namespace serial {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate);

void conv1d_forward(const double* x, const double* w, const double* bias, double* y,
                    std::size_t batch, std::size_t len, std::size_t ch, std::size_t filters,
                    std::size_t k, std::size_t stride);

void conv1d_backward_input(const double* dy, const double* w, double* dx, std::size_t batch,
                           std::size_t len, std::size_t ch, std::size_t filters, std::size_t k,
                           std::size_t stride);

void conv1d_backward_kernels(const double* dy, const double* x, double* dw, double* dbias,
                             std::size_t batch, std::size_t len, std::size_t ch,
                             std::size_t filters, std::size_t k, std::size_t stride);

}  // namespace serial

}  // namespace dcast::nn::kernels
