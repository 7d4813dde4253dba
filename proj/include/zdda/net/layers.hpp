// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_NET_LAYERS_HPP_
#define ZDDA_NET_LAYERS_HPP_

#include <Eigen/Core>

#include "zdda/image.hpp"

namespace zdda {

// Batches are (pixels x n) matrices, one image per column, plane-major
// within a column. Convolutions are stride-1 "valid"; pooling is 2x2/2.

using IndexMat = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;

inline int conv_output_side(int side, int k) { return side - k + 1; }

// Unrolls every kxk window of every image into a column of `col`
// ((in_ch*k*k) x (oh*ow*n)); image i occupies the i-th block of oh*ow
// columns. Row order is (channel, ky, kx).
template <class S>
void im2col(const Mat<S>& x, const ImageShape& in, int k, Mat<S>& col) {
  const int oh = conv_output_side(in.height, k);
  const int ow = conv_output_side(in.width, k);
  const Eigen::Index n = x.cols();
  const Eigen::Index window = static_cast<Eigen::Index>(in.channels) * k * k;
  const Eigen::Index per_image = static_cast<Eigen::Index>(oh) * ow;
  col.resize(window, per_image * n);

#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const S* src = x.col(i).data();
    for (int c = 0; c < in.channels; ++c) {
      const S* plane = src + static_cast<Eigen::Index>(c) * in.plane();
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
          for (int oy = 0; oy < oh; ++oy) {
            const S* s = plane + static_cast<Eigen::Index>(oy + ky) * in.width + kx;
            S* d = col.data() + (i * per_image + static_cast<Eigen::Index>(oy) * ow) * window + row;
            for (int ox = 0; ox < ow; ++ox) d[static_cast<Eigen::Index>(ox) * window] = s[ox];
          }
        }
    }
  }
}

// Adjoint of im2col: scatter-adds column gradients back onto image pixels.
template <class S>
void col2im(const Mat<S>& dcol, const ImageShape& in, int k, Mat<S>& dx) {
  const int oh = conv_output_side(in.height, k);
  const int ow = conv_output_side(in.width, k);
  const Eigen::Index window = static_cast<Eigen::Index>(in.channels) * k * k;
  const Eigen::Index per_image = static_cast<Eigen::Index>(oh) * ow;
  const Eigen::Index n = dcol.cols() / per_image;
  dx.setZero(in.pixels(), n);

#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    S* dst = dx.col(i).data();
    for (int c = 0; c < in.channels; ++c) {
      S* plane = dst + static_cast<Eigen::Index>(c) * in.plane();
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
          for (int oy = 0; oy < oh; ++oy) {
            S* d = plane + static_cast<Eigen::Index>(oy + ky) * in.width + kx;
            const S* s = dcol.data() + (i * per_image + static_cast<Eigen::Index>(oy) * ow) * window + row;
            for (int ox = 0; ox < ow; ++ox) d[ox] += s[static_cast<Eigen::Index>(ox) * window];
          }
        }
    }
  }
}

// GEMM output (out_ch x oh*ow*n) -> activation layout ((out_ch*oh*ow) x n).
template <class S>
void conv_regroup(const Mat<S>& flat, int out_ch, Eigen::Index per_image,
                  Mat<S>& act) {
  const Eigen::Index n = flat.cols() / per_image;
  act.resize(static_cast<Eigen::Index>(out_ch) * per_image, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index p = 0; p < per_image; ++p)
      for (int c = 0; c < out_ch; ++c)
        act(static_cast<Eigen::Index>(c) * per_image + p, i) = flat(c, i * per_image + p);
}

template <class S>
void conv_regroup_adjoint(const Mat<S>& act, int out_ch,
                          Eigen::Index per_image, Mat<S>& flat) {
  const Eigen::Index n = act.cols();
  flat.resize(out_ch, per_image * n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index p = 0; p < per_image; ++p)
      for (int c = 0; c < out_ch; ++c)
        flat(c, i * per_image + p) = act(static_cast<Eigen::Index>(c) * per_image + p, i);
}

// Cached intermediates of one convolution forward pass.
template <class S>
struct ConvTrace {
  Mat<S> col;  // im2col of the input
};

// weight: (out_ch x in_ch*k*k), bias: (out_ch x 1).
template <class S>
Mat<S> conv_forward(const Mat<S>& x, const ImageShape& in, int k,
                    const Mat<S>& weight, const Mat<S>& bias,
                    ConvTrace<S>* trace = nullptr) {
  const int out_ch = static_cast<int>(weight.rows());
  const Eigen::Index per_image =
      static_cast<Eigen::Index>(conv_output_side(in.height, k)) *
      conv_output_side(in.width, k);
  Mat<S> local_col;
  Mat<S>& col = trace ? trace->col : local_col;
  im2col(x, in, k, col);
  Mat<S> flat = weight * col;
  flat.colwise() += bias.col(0);
  Mat<S> act;
  conv_regroup(flat, out_ch, per_image, act);
  return act;
}

// Accumulates dweight/dbias; writes dx when requested.
template <class S>
void conv_backward(const Mat<S>& dact, const ImageShape& in, int k,
                   const Mat<S>& weight, const ConvTrace<S>& trace,
                   Mat<S>& dweight, Mat<S>& dbias, Mat<S>* dx = nullptr) {
  const int out_ch = static_cast<int>(weight.rows());
  const Eigen::Index per_image =
      static_cast<Eigen::Index>(conv_output_side(in.height, k)) *
      conv_output_side(in.width, k);
  Mat<S> dflat;
  conv_regroup_adjoint(dact, out_ch, per_image, dflat);
  dweight.noalias() += dflat * trace.col.transpose();
  dbias.col(0) += dflat.rowwise().sum();
  if (dx) {
    Mat<S> dcol = weight.transpose() * dflat;
    col2im(dcol, in, k, *dx);
  }
}

// 2x2 stride-2 max pooling on the activation layout. Ties resolve to the
// first element in scan order. argmax stores flat indices into the input
// column so the backward pass is a plain scatter.
template <class S>
Mat<S> maxpool2_forward(const Mat<S>& x, const ImageShape& in,
                        IndexMat& argmax) {
  const int oh = in.height / 2;
  const int ow = in.width / 2;
  const Eigen::Index n = x.cols();
  Mat<S> y(static_cast<Eigen::Index>(in.channels) * oh * ow, n);
  argmax.resize(y.rows(), n);

#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const S* src = x.col(i).data();
    for (int c = 0; c < in.channels; ++c) {
      const Eigen::Index pbase = static_cast<Eigen::Index>(c) * in.plane();
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          Eigen::Index best = pbase + (2 * oy) * in.width + 2 * ox;
          S best_v = src[best];
          const Eigen::Index candidates[3] = {best + 1, best + in.width,
                                              best + in.width + 1};
          for (Eigen::Index idx : candidates)
            if (src[idx] > best_v) {
              best_v = src[idx];
              best = idx;
            }
          const Eigen::Index out_idx =
              static_cast<Eigen::Index>(c) * oh * ow + static_cast<Eigen::Index>(oy) * ow + ox;
          y(out_idx, i) = best_v;
          argmax(out_idx, i) = static_cast<std::int32_t>(best);
        }
    }
  }
  return y;
}

template <class S>
Mat<S> maxpool2_backward(const Mat<S>& dy, const IndexMat& argmax,
                         Eigen::Index input_pixels) {
  Mat<S> dx = Mat<S>::Zero(input_pixels, dy.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < dy.cols(); ++i)
    for (Eigen::Index r = 0; r < dy.rows(); ++r)
      dx(argmax(r, i), i) += dy(r, i);
  return dx;
}

// Fully connected: y = W x + b.
template <class S>
Mat<S> dense_forward(const Mat<S>& x, const Mat<S>& weight,
                     const Mat<S>& bias) {
  Mat<S> y = weight * x;
  y.colwise() += bias.col(0);
  return y;
}

template <class S>
void dense_backward(const Mat<S>& dy, const Mat<S>& x, const Mat<S>& weight,
                    Mat<S>& dweight, Mat<S>& dbias, Mat<S>* dx = nullptr) {
  dweight.noalias() += dy * x.transpose();
  dbias.col(0) += dy.rowwise().sum();
  if (dx) dx->noalias() = weight.transpose() * dy;
}

template <class S>
Mat<S> relu(const Mat<S>& x) {
  return x.cwiseMax(S(0));
}

// Gradient through relu given the pre-activation input.
template <class S>
Mat<S> relu_backward(const Mat<S>& dy, const Mat<S>& x_pre) {
  return (x_pre.array() > S(0)).select(dy, Mat<S>::Zero(dy.rows(), dy.cols()));
}

}  // namespace zdda

#endif  // ZDDA_NET_LAYERS_HPP_
