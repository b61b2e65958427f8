#pragma once

#include <cstdint>
#include <vector>

#include "mmlab/env.hpp"
#include "mmlab/error.hpp"
#include "mmlab/rng.hpp"

namespace mmlab {

struct Transition {
    StateVector s;
    int action = 0;
    StateVector s_next;
    double reward = 0.0;
    bool terminal = false;
};

// Bounded transition store. In the paper-faithful mode the trainer fills it to
// capacity, samples one batch, and flushes; in classic mode it behaves as a
// sliding window (oldest overwritten).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) raise(Errc::bad_config, "replay capacity must be positive");
        data_.reserve(capacity);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return data_.size(); }
    bool full() const { return data_.size() == capacity_; }

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[write_] = std::move(t);
            write_ = (write_ + 1) % capacity_;
        }
    }

    void clear() {
        data_.clear();
        write_ = 0;
    }

    // uniform sample without replacement (partial Fisher-Yates over indices)
    std::vector<Transition> sample(std::size_t n, Rng& rng) const {
        if (n == 0 || n > data_.size())
            raise(Errc::empty_batch, "cannot sample " + format_int(static_cast<std::int64_t>(n)) +
                                         " of " + format_int(static_cast<std::int64_t>(data_.size())));
        std::vector<std::size_t> idx(data_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<Transition> batch;
        batch.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(idx.size() - i) - 1));
            std::swap(idx[i], idx[j]);
            batch.push_back(data_[idx[i]]);
        }
        return batch;
    }

private:
    std::size_t capacity_;
    std::vector<Transition> data_;
    std::size_t write_ = 0;
};

}  // namespace mmlab
