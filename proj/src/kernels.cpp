#include "dcast/kernels.hpp"

#include "dcast/errors.hpp"

namespace dcast::nn::kernels {

namespace {
// Below this many multiply-adds the parallel-for fork costs more than it buys.
constexpr std::size_t kParallelGrain = 16 * 1024;
}  // namespace

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate) {
  if (trans_a && trans_b) throw ConfigError("matmul: aT*bT is not supported");
  const std::size_t work = m * k * n;
  if (!accumulate) {
    const std::size_t total = m * n;
#pragma omp parallel for if (total > 4096) schedule(static)
    for (std::size_t i = 0; i < total; ++i) c[i] = 0.0;
  }
  if (!trans_a && !trans_b) {
    // c[i,j] += a[i,p] * b[p,j], p ascending per output element
#pragma omp parallel for if (work > kParallelGrain) schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * n;
      const double* arow = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!trans_a && trans_b) {
    // b stored [n,k]; c[i,j] += dot(a[i,:], b[j,:])
#pragma omp parallel for if (work > kParallelGrain) schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a + i * k;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] += acc;
      }
    }
  } else {
    // a stored [k,m]; c[i,j] += a[p,i] * b[p,j]
#pragma omp parallel for if (work > kParallelGrain) schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = a[p * m + i];
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

void conv1d_forward(const double* x, const double* w, const double* bias, double* y,
                    std::size_t batch, std::size_t len, std::size_t ch, std::size_t filters,
                    std::size_t k, std::size_t stride) {
  const std::size_t out_len = (len - k) / stride + 1;
  const std::size_t work = batch * out_len * filters * k * ch;
#pragma omp parallel for if (work > kParallelGrain) collapse(2) schedule(static)
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      const double* xwin = x + (b * len + t * stride) * ch;
      double* yrow = y + (b * out_len + t) * filters;
      for (std::size_t f = 0; f < filters; ++f) {
        const double* wf = w + f * k * ch;
        double acc = bias ? bias[f] : 0.0;
        for (std::size_t i = 0; i < k * ch; ++i) acc += xwin[i] * wf[i];
        yrow[f] = acc;
      }
    }
  }
}

void conv1d_backward_input(const double* dy, const double* w, double* dx, std::size_t batch,
                           std::size_t len, std::size_t ch, std::size_t filters, std::size_t k,
                           std::size_t stride) {
  const std::size_t out_len = (len - k) / stride + 1;
  // Each batch element owns a disjoint slice of dx.
#pragma omp parallel for if (batch > 1) schedule(static)
  for (std::size_t b = 0; b < batch; ++b) {
    double* dxb = dx + b * len * ch;
    for (std::size_t t = 0; t < out_len; ++t) {
      const double* dyrow = dy + (b * out_len + t) * filters;
      double* dxwin = dxb + t * stride * ch;
      for (std::size_t f = 0; f < filters; ++f) {
        const double g = dyrow[f];
        const double* wf = w + f * k * ch;
        for (std::size_t i = 0; i < k * ch; ++i) dxwin[i] += g * wf[i];
      }
    }
  }
}

void conv1d_backward_kernels(const double* dy, const double* x, double* dw, double* dbias,
                             std::size_t batch, std::size_t len, std::size_t ch,
                             std::size_t filters, std::size_t k, std::size_t stride) {
  const std::size_t out_len = (len - k) / stride + 1;
#pragma omp parallel for if (filters > 1) schedule(static)
  for (std::size_t f = 0; f < filters; ++f) {
    double* dwf = dw + f * k * ch;
    double bias_acc = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < out_len; ++t) {
        const double g = dy[(b * out_len + t) * filters + f];
        bias_acc += g;
        const double* xwin = x + (b * len + t * stride) * ch;
        for (std::size_t i = 0; i < k * ch; ++i) dwf[i] += g * xwin[i];
      }
    }
    if (dbias) dbias[f] += bias_acc;
  }
}

namespace serial {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate) {
  if (trans_a && trans_b) throw ConfigError("matmul: aT*bT is not supported");
  if (!accumulate)
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  if (!trans_a && !trans_b) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += a[i * k + p] * b[p * n + j];
  } else if (!trans_a && trans_b) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
        c[i * n + j] += acc;
      }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += a[p * m + i] * b[p * n + j];
  }
}

void conv1d_forward(const double* x, const double* w, const double* bias, double* y,
                    std::size_t batch, std::size_t len, std::size_t ch, std::size_t filters,
                    std::size_t k, std::size_t stride) {
  const std::size_t out_len = (len - k) / stride + 1;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < out_len; ++t)
      for (std::size_t f = 0; f < filters; ++f) {
        double acc = bias ? bias[f] : 0.0;
        for (std::size_t i = 0; i < k * ch; ++i)
          acc += x[(b * len + t * stride) * ch + i] * w[f * k * ch + i];
        y[(b * out_len + t) * filters + f] = acc;
      }
}

void conv1d_backward_input(const double* dy, const double* w, double* dx, std::size_t batch,
                           std::size_t len, std::size_t ch, std::size_t filters, std::size_t k,
                           std::size_t stride) {
  const std::size_t out_len = (len - k) / stride + 1;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < out_len; ++t)
      for (std::size_t f = 0; f < filters; ++f) {
        const double g = dy[(b * out_len + t) * filters + f];
        for (std::size_t i = 0; i < k * ch; ++i)
          dx[(b * len + t * stride) * ch + i] += g * w[f * k * ch + i];
      }
}

void conv1d_backward_kernels(const double* dy, const double* x, double* dw, double* dbias,
                             std::size_t batch, std::size_t len, std::size_t ch,
                             std::size_t filters, std::size_t k, std::size_t stride) {
  const std::size_t out_len = (len - k) / stride + 1;
  for (std::size_t f = 0; f < filters; ++f) {
    double bias_acc = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < out_len; ++t) {
        const double g = dy[(b * out_len + t) * filters + f];
        bias_acc += g;
        for (std::size_t i = 0; i < k * ch; ++i)
          dw[f * k * ch + i] += g * x[(b * len + t * stride) * ch + i];
      }
    if (dbias) dbias[f] += bias_acc;
  }
}

}  // namespace serial

}  // namespace dcast::nn::kernels
