// Copyright 2026 The THzVR Authors. All Rights Reserved.
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

#ifndef THZVR_PARALLEL_HPP_
#define THZVR_PARALLEL_HPP_

#include <exception>
#include <mutex>

namespace thzvr {

// Runs fn(i) for i in [0, n) on up to |workers| threads. Each index must
// write only its own output slot. The first exception is rethrown.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  std::exception_ptr error;
  std::mutex mu;
#pragma omp parallel for num_threads(workers > 0 ? workers : 1) schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace thzvr

#endif  // THZVR_PARALLEL_HPP_
