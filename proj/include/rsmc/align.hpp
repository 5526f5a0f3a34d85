// Copyright 2026 The rsmc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-subject linear calibration. The bank lives inside a ParamStore as one
// F x F matrix per source subject under align/W_s/<subject id>; inference
// uses the element-wise mean of the bank.

#ifndef RSMC_ALIGN_HPP_
#define RSMC_ALIGN_HPP_

#include <span>
#include <string>
#include <vector>

#include "rsmc/ops.hpp"

namespace rsmc {

std::string alignment_path(int subject);

// Adds an identity-initialised matrix for every listed subject.
template <typename S>
void add_alignment_bank(ParamStore<S>& store, std::span<const int> subjects, Index features);

// Subject ids with a matrix in the bank, ascending.
template <typename S>
std::vector<int> alignment_subjects(const ParamStore<S>& store);

// (1/S) * sum_s W_s. Throws PreconditionError on an empty bank.
template <typename S>
Matrix<S> alignment_mean(const ParamStore<S>& store);

// x: (B*T) x F. Sample b is right-multiplied by the matrix of
// sample_subjects[b]; unknown ids throw LookupError.
template <typename S>
Var calibrate_train(Tape<S>& tape, ParamStore<S>& store, Var x,
                    std::span<const int> sample_subjects, Index time);

// Every row right-multiplied by the bank mean (a constant on the tape).
template <typename S>
Var calibrate_test(Tape<S>& tape, const ParamStore<S>& store, Var x);

}  // namespace rsmc

#endif  // RSMC_ALIGN_HPP_
