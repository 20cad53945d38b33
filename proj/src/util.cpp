#include "lvfa/util.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lvfa {

int thread_cap() {
  if (const char* env = std::getenv("LVFA_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return std::min(v, 64);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::clamp<int>(static_cast<int>(hw ? hw : 1), 1, 16);
}

void parallel_for(int n, const std::function<void(int)>& f) {
  const int workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double subspace_angle(const Mat& A, const Mat& B) {
  if (A.cols() == 0 && B.cols() == 0) return 0.0;
  if (A.cols() != B.cols()) return 1.5707963267948966;  // dimension mismatch: right angle
  Eigen::HouseholderQR<Mat> qa(A), qb(B);
  const Mat QA = qa.householderQ() * Mat::Identity(A.rows(), A.cols());
  const Mat QB = qb.householderQ() * Mat::Identity(B.rows(), B.cols());
  Eigen::JacobiSVD<Mat> svd(QA.transpose() * QB);
  const double c = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace lvfa
