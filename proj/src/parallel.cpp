// parallel.cpp -- thread pool implementation.
#include "stablehomog/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace stablehomog {

namespace {

constexpr std::size_t kDefaultChunk = 1024;

int read_worker_env() {
    const char* s = std::getenv("STABLE_HOMOG_THREADS");
    if (s != nullptr) {
        long v = std::strtol(s, nullptr, 10);
        if (v >= 1) return static_cast<int>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Lazy singleton pool. Workers pull chunk indices from an atomic counter;
// which worker runs a chunk never affects where its result lands.
class Pool {
public:
    static Pool& instance() {
        static Pool p;
        return p;
    }

    // Set while a thread executes chunk bodies; nested regions run inline.
    static thread_local bool inside_region;

    void run(std::size_t nchunks,
             const std::function<void(std::size_t)>& body) {
        if (nchunks == 0) return;
        if (inside_region || workers_.empty() || nchunks == 1) {
            for (std::size_t c = 0; c < nchunks; ++c) body(c);
            return;
        }
        std::unique_lock<std::mutex> lk(mu_);
        body_ = &body;
        next_ = 0;
        total_ = nchunks;
        done_ = 0;
        error_ = nullptr;
        ++generation_;
        cv_.notify_all();
        // The submitting thread participates too.
        lk.unlock();
        work();
        lk.lock();
        finished_cv_.wait(lk, [&] { return done_ == total_; });
        body_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    Pool() {
        int n = read_worker_env();
        for (int i = 1; i < n; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stopping_ = true;
            ++generation_;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return stopping_ || generation_ != seen; });
                if (stopping_) return;
                seen = generation_;
                if (body_ == nullptr) continue;
            }
            work();
        }
    }

    void work() {
        const std::function<void(std::size_t)>* body;
        {
            std::lock_guard<std::mutex> lk(mu_);
            body = body_;
        }
        if (body == nullptr) return;
        inside_region = true;
        struct Reset {
            ~Reset() { inside_region = false; }
        } reset;
        for (;;) {
            std::size_t c = next_.fetch_add(1);
            if (c >= total_) break;
            try {
                (*body)(c);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu_);
                if (!error_) error_ = std::current_exception();
            }
            std::lock_guard<std::mutex> lk(mu_);
            if (++done_ == total_) finished_cv_.notify_all();
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable finished_cv_;
    const std::function<void(std::size_t)>* body_ = nullptr;
    std::atomic<std::size_t> next_{0};
    std::size_t total_ = 0;
    std::size_t done_ = 0;
    std::uint64_t generation_ = 0;
    bool stopping_ = false;
    std::exception_ptr error_;
};

thread_local bool Pool::inside_region = false;

}  // namespace

int worker_count() {
    static int n = read_worker_env();
    return n;
}

void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (chunk == 0) chunk = kDefaultChunk;
    std::size_t nchunks = (n + chunk - 1) / chunk;
    Pool::instance().run(nchunks, [&](std::size_t c) {
        std::size_t b = c * chunk;
        std::size_t e = b + chunk < n ? b + chunk : n;
        fn(c, b, e);
    });
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    parallel_chunks(n, kDefaultChunk,
                    [&](std::size_t, std::size_t b, std::size_t e) { fn(b, e); });
}

double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& fn) {
    if (n == 0) return 0.0;
    std::size_t chunk = kDefaultChunk;
    std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<double> slots(nchunks, 0.0);
    parallel_chunks(n, chunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        double acc = 0.0;
        for (std::size_t i = b; i < e; ++i) acc += fn(i);
        slots[c] = acc;
    });
    double total = 0.0;
    for (double v : slots) total += v;
    return total;
}

double det_dot(const double* a, const double* b, std::size_t n) {
    if (n == 0) return 0.0;
    std::size_t chunk = 4096;
    std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<double> slots(nchunks, 0.0);
    parallel_chunks(n, chunk, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += a[i] * b[i];
        slots[c] = acc;
    });
    double total = 0.0;
    for (double v : slots) total += v;
    return total;
}

double det_sumsq(const double* a, std::size_t n) { return det_dot(a, a, n); }

}  // namespace stablehomog
