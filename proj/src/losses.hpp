// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tkgd {

/// Scalar loss and its gradient with respect to the student-side input.
struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

/// Read-only row-major matrix over caller storage.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

/// alpha * tau^2 * KL(softmax(teacher/tau) || softmax(student/tau))
///   + (1 - alpha) * CE(onehot(gt), softmax(student)).
LossResult kd_soft_loss(std::span<const double> teacher, std::span<const double> student,
                        std::size_t ground_truth_index, double tau, double alpha_kd);

/// tau^2 * KL(softmax(teacher/tau) || softmax(student/tau)).
LossResult bkd_loss(std::span<const double> teacher, std::span<const double> student, double tau);

double huber(double residual, double delta);
/// d huber / d residual, i.e. the residual clipped to [-delta, delta].
double huber_slope(double residual, double delta);

/// Mean Huber(llm - student) over aligned entries; gradient w.r.t. student.
LossResult huber_alignment_loss(std::span<const double> llm, std::span<const double> student, double delta);

/// Min-max maps `x` onto [0, 1]; a constant vector maps to 0.5 everywhere.
std::vector<double> min_max_normalize(std::span<const double> x);

/// huber_alignment_loss on independently min-max normalised inputs, with the
/// gradient carried back through the student's normalisation.
LossResult normalized_alignment_loss(std::span<const double> llm, std::span<const double> student, double delta);

/// Mean squared error between softmax(student) and onehot(gt).
LossResult supervised_loss(std::span<const double> student, std::size_t ground_truth_index);

struct LossWeights {
  double lambda_llm = 0.5;
  double beta = 0.1;
};

/// l1 + lambda_llm * l2 + beta * l3.
double total_loss(double l1, double l2, double l3, const LossWeights& weights);

struct FitnetResult {
  double value = 0.0;
  std::vector<double> d_student;    // rows x d_student
  std::vector<double> d_regressor;  // d_student x d_teacher
};

/// Mean over rows of |student_row * regressor - teacher_row|^2.
FitnetResult fitnet_hint_loss(const MatrixView& student, const MatrixView& teacher, const MatrixView& regressor);

struct RkdResult {
  double value = 0.0;
  double distance_term = 0.0;
  double angle_term = 0.0;
  std::vector<double> d_student;  // rows x d_student
};

/// Relational distillation over a batch of >= 3 embeddings: Huber(1) between
/// mean-normalised pairwise distances plus 2 * Huber(1) between the cosines of
/// every ordered triplet angle. The teacher side is constant.
RkdResult rkd_loss(const MatrixView& student, const MatrixView& teacher);

}  // namespace tkgd
