#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "mmlab/error.hpp"
#include "mmlab/ticks.hpp"

namespace mmlab {

// The four quoting actions: (ask?, bid?) with one contract per quoted side.
// Quotes are placed at the best price of the self side and expire at the end
// of the step.
enum class Action : int { NN = 0, NB = 1, AN = 2, AB = 3 };

constexpr int kNumActions = 4;

constexpr bool quotes_ask(Action a) { return a == Action::AN || a == Action::AB; }
constexpr bool quotes_bid(Action a) { return a == Action::NB || a == Action::AB; }

inline const char* to_string(Action a) {
    switch (a) {
        case Action::NN: return "NN";
        case Action::NB: return "NB";
        case Action::AN: return "AN";
        case Action::AB: return "AB";
    }
    return "?";
}

inline Action action_from_string(std::string_view s) {
    if (s == "NN") return Action::NN;
    if (s == "NB") return Action::NB;
    if (s == "AN") return Action::AN;
    if (s == "AB") return Action::AB;
    raise(Errc::bad_config, "unknown action '" + std::string(s) + "'");
}

struct FillReport {
    bool match_ask = false;
    bool match_bid = false;
    std::int64_t ask_fill_price = 0;  // ticks; set only when the ask was quoted
    std::int64_t bid_fill_price = 0;

    int fills() const { return (match_ask ? 1 : 0) + (match_bid ? 1 : 0); }
};

// Execution check between two consecutive snapshots: a limit order quoted at
// the best self-side price of tick_t fills iff the next last price strictly
// crosses it. `fill_on_touch` relaxes the strict inequality for sensitivity
// studies; the default follows the crossing rule as stated.
inline FillReport check_execution(Action action, const TickRecord& tick_t,
                                  const TickRecord& tick_next, bool fill_on_touch = false) {
    FillReport f;
    if (quotes_ask(action)) {
        f.ask_fill_price = tick_t.ask_price[0];
        f.match_ask = fill_on_touch ? tick_next.last_price >= tick_t.ask_price[0]
                                    : tick_next.last_price > tick_t.ask_price[0];
    }
    if (quotes_bid(action)) {
        f.bid_fill_price = tick_t.bid_price[0];
        f.match_bid = fill_on_touch ? tick_next.last_price <= tick_t.bid_price[0]
                                    : tick_next.last_price < tick_t.bid_price[0];
    }
    return f;
}

enum class RewardKind { symmetric, inventory_punish };

inline const char* to_string(RewardKind k) {
    return k == RewardKind::symmetric ? "sym" : "punish";
}

inline RewardKind reward_kind_from_string(std::string_view s) {
    if (s == "sym" || s == "symmetric") return RewardKind::symmetric;
    if (s == "punish" || s == "inventory_punish") return RewardKind::inventory_punish;
    raise(Errc::bad_config, "unknown reward kind '" + std::string(s) + "'");
}

// Step reward in tick units. The punished variant subtracts the absolute
// inventory to keep the agent's exposure around zero.
inline double reward(RewardKind kind, double d_cash, double d_inv_value, std::int64_t inv) {
    const double base = d_cash + d_inv_value;
    return kind == RewardKind::symmetric ? base
                                         : base - static_cast<double>(std::llabs(inv));
}

// Account in half-tick integer units: every quantity the ledger touches
// (half-spreads, mid moves, commissions) is an integer there, so the wealth
// identity can be asserted exactly.
struct AccountState {
    std::int64_t cash_ht = 0;
    std::int64_t inventory = 0;  // signed contracts
    std::int64_t inv_value_ht = 0;
    std::int64_t wealth_ht = 0;  // accumulated separately; must equal cash + inv_value

    double cash() const { return static_cast<double>(cash_ht) / 2.0; }
    double inv_value() const { return static_cast<double>(inv_value_ht) / 2.0; }
    double wealth() const { return static_cast<double>(wealth_ht) / 2.0; }
    bool identity_holds() const { return wealth_ht == cash_ht + inv_value_ht; }
};

// One step's ledger change, half-tick units.
struct AccountDelta {
    std::int64_t d_cash_ht = 0;
    std::int64_t d_inv = 0;
    std::int64_t d_inv_value_ht = 0;
};

// Per-fill accounting: each executed limit order captures half the spread at
// quoting time and pays the commission; inventory moves one contract toward
// the filled side; the post-fill inventory rides the mid move to the next
// snapshot.
inline AccountDelta account_delta(const FillReport& fill, std::int64_t spread_ticks,
                                  std::int64_t commission_ht, std::int64_t inv_before,
                                  std::int64_t d_mid_ht) {
    AccountDelta d;
    const std::int64_t n = fill.fills();
    d.d_cash_ht = n * spread_ticks - n * commission_ht;  // ½·spread per fill, in half-ticks
    d.d_inv = (fill.match_bid ? 1 : 0) - (fill.match_ask ? 1 : 0);
    d.d_inv_value_ht = (inv_before + d.d_inv) * d_mid_ht;
    return d;
}

struct EnvConfig {
    RewardKind reward_kind = RewardKind::symmetric;
    double commission_per_fill = 1.0;  // ticks; must be a multiple of 0.5
    int vol_window = 50;               // volatility lookback, ticks
    int d_inv_lag = 50;                // inventory-value delta lag, ticks
    int warmup = 50;                   // >= both windows
    bool commission_in_reward = true;  // charge the fee inside the reward's cash delta
    bool fill_on_touch = false;
    bool liquidate_at_close = false;   // cross the book to flatten at the final tick

    std::int64_t commission_half_ticks() const {
        const double ht = commission_per_fill * 2.0;
        return static_cast<std::int64_t>(std::llround(ht));
    }

    void validate() const {
        if (commission_per_fill < 0.0) raise(Errc::bad_config, "commission must be >= 0");
        const double ht = commission_per_fill * 2.0;
        if (std::abs(ht - std::llround(ht)) > 1e-9)
            raise(Errc::bad_config, "commission must be a multiple of 0.5 tick");
        if (vol_window < 2) raise(Errc::bad_config, "vol_window must be >= 2");
        if (d_inv_lag < 1) raise(Errc::bad_config, "d_inv_lag must be >= 1");
        if (warmup < vol_window || warmup < d_inv_lag)
            raise(Errc::bad_config, "warmup must cover both feature windows");
    }
};

// The five engineered features the agent observes.
struct StateVector {
    double imbalance = 0.0;    // 5-level depth imbalance, [-1, 1]
    double volatility = 0.0;   // sample std of mid over vol_window ticks
    double inventory = 0.0;    // signed contracts
    double spread = 0.0;       // ticks
    double d_inv_value = 0.0;  // inv_value now minus d_inv_lag steps ago, ticks

    static constexpr int kDim = 5;

    std::array<double, kDim> as_array() const {
        return {imbalance, volatility, inventory, spread, d_inv_value};
    }
    static StateVector from_array(const std::array<double, kDim>& a) {
        return {a[0], a[1], a[2], a[3], a[4]};
    }

    friend bool operator==(const StateVector&, const StateVector&) = default;
};

inline const std::array<std::string, StateVector::kDim>& state_var_names() {
    static const std::array<std::string, StateVector::kDim> names = {
        "imbalance", "volatility", "inventory", "spread", "d_inv_value"};
    return names;
}

// Assembles the state from a derived-tick window (most recent last), the
// account, and the inventory-value history (tick units, current value last).
inline StateVector compute_features(std::span<const DerivedTick> window,
                                    const AccountState& account,
                                    std::span<const double> inv_value_hist, int vol_window,
                                    int d_inv_lag = 50) {
    if (static_cast<int>(window.size()) < vol_window)
        raise(Errc::insufficient_history, "derived-tick window shorter than vol_window");
    if (static_cast<int>(inv_value_hist.size()) < d_inv_lag + 1)
        raise(Errc::insufficient_history, "inventory-value history shorter than d_inv_lag");

    StateVector s;
    const DerivedTick& cur = window.back();
    s.imbalance = cur.imbalance;
    s.spread = static_cast<double>(cur.spread);
    s.inventory = static_cast<double>(account.inventory);

    const std::size_t n = static_cast<std::size_t>(vol_window);
    double mean = 0.0;
    for (std::size_t i = window.size() - n; i < window.size(); ++i) mean += window[i].mid;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = window.size() - n; i < window.size(); ++i) {
        const double d = window[i].mid - mean;
        ss += d * d;
    }
    s.volatility = std::sqrt(ss / static_cast<double>(n - 1));

    s.d_inv_value = inv_value_hist.back() -
                    inv_value_hist[inv_value_hist.size() - 1 - static_cast<std::size_t>(d_inv_lag)];
    return s;
}

// Interface the training loop drives; implemented by MarketEnv and by test
// adapters that wrap tabular MDPs.
class EpisodicEnv {
public:
    struct Step {
        StateVector state;
        double reward = 0.0;
        bool done = false;
    };

    virtual ~EpisodicEnv() = default;
    virtual StateVector reset() = 0;
    virtual Step step(int action) = 0;
    virtual std::size_t length_hint() const = 0;
};

// Episodic market-making environment over one immutable session. Strictly
// sequential; run concurrent backtests with one handle per thread.
class MarketEnv final : public EpisodicEnv {
public:
    struct Outcome {
        StateVector state;     // features after advancing to the next tick
        double reward = 0.0;   // tick units
        FillReport fill;
        bool done = false;
        double d_cash = 0.0;       // ticks, net of commission
        double d_inv_value = 0.0;  // ticks
    };

    MarketEnv(const TickSeries& series, EnvConfig config)
        : series_(&series), cfg_(config), commission_ht_(config.commission_half_ticks()) {
        cfg_.validate();
        if (series_->records.size() <= static_cast<std::size_t>(cfg_.warmup) + 1)
            raise(Errc::series_too_short,
                  "series has " + format_int(static_cast<std::int64_t>(series_->records.size())) +
                      " ticks, need more than warmup + 1 = " + format_int(cfg_.warmup + 1));
        reset();
    }

    StateVector reset() override {
        account_ = AccountState{};
        cursor_ = static_cast<std::size_t>(cfg_.warmup);
        done_ = false;
        window_.clear();
        for (std::size_t i = cursor_ + 1 - static_cast<std::size_t>(cfg_.vol_window);
             i <= cursor_; ++i)
            window_.push_back(derive(series_->records[i]));
        // the account was flat for the whole warmup: pad the value history so
        // the lagged delta reads zero until d_inv_lag real steps have passed
        inv_value_hist_.assign(static_cast<std::size_t>(cfg_.d_inv_lag) + 1, 0.0);
        state_ = features();
        return state_;
    }

    // Quote, check execution against the next snapshot, settle the ledger.
    Outcome step_action(Action action) {
        if (done_) raise(Errc::stepped_past_end, "episode already finished");
        const TickRecord& cur = series_->records[cursor_];
        const TickRecord& next = series_->records[cursor_ + 1];

        Outcome out;
        out.fill = check_execution(action, cur, next, cfg_.fill_on_touch);

        const std::int64_t spread_ticks = cur.ask_price[0] - cur.bid_price[0];
        const std::int64_t d_mid_ht = mid_half_ticks(next) - mid_half_ticks(cur);
        AccountDelta d = account_delta(out.fill, spread_ticks, commission_ht_,
                                       account_.inventory, d_mid_ht);

        cursor_ += 1;
        done_ = cursor_ + 1 >= series_->records.size();

        if (done_ && cfg_.liquidate_at_close && account_.inventory + d.d_inv != 0) {
            // flatten by crossing the final book: pay half the spread plus the
            // commission per contract; the mark-to-mid P&L already sits in
            // inv_value, so only the crossing cost hits cash
            const std::int64_t pos = std::llabs(account_.inventory + d.d_inv);
            const std::int64_t final_spread = next.ask_price[0] - next.bid_price[0];
            d.d_cash_ht -= pos * (final_spread + commission_ht_);
            d.d_inv = -account_.inventory;
        }

        account_.cash_ht += d.d_cash_ht;
        account_.inventory += d.d_inv;
        account_.inv_value_ht += d.d_inv_value_ht;
        account_.wealth_ht += d.d_cash_ht + d.d_inv_value_ht;

        window_.push_back(derive(next));
        if (static_cast<int>(window_.size()) > cfg_.vol_window) window_.pop_front();
        inv_value_hist_.push_back(account_.inv_value());

        out.d_cash = static_cast<double>(d.d_cash_ht) / 2.0;
        out.d_inv_value = static_cast<double>(d.d_inv_value_ht) / 2.0;
        const double reward_cash =
            cfg_.commission_in_reward
                ? out.d_cash
                : static_cast<double>(d.d_cash_ht + out.fill.fills() * commission_ht_) / 2.0;
        out.reward = reward(cfg_.reward_kind, reward_cash, out.d_inv_value, account_.inventory);
        out.done = done_;
        state_ = features();
        out.state = state_;
        return out;
    }

    // EpisodicEnv surface for the training loop
    Step step(int action) override {
        const Outcome o = step_action(static_cast<Action>(action));
        return {o.state, o.reward, o.done};
    }
    std::size_t length_hint() const override {
        return series_->records.size() - static_cast<std::size_t>(cfg_.warmup) - 1;
    }

    bool done() const { return done_; }
    std::size_t cursor() const { return cursor_; }
    const AccountState& account() const { return account_; }
    const StateVector& state() const { return state_; }
    const TickSeries& series() const { return *series_; }
    const EnvConfig& config() const { return cfg_; }

private:
    StateVector features() const {
        const std::size_t lag = static_cast<std::size_t>(cfg_.d_inv_lag);
        std::vector<DerivedTick> w(window_.begin(), window_.end());
        std::span<const double> hist(inv_value_hist_.data() + inv_value_hist_.size() - (lag + 1),
                                     lag + 1);
        return compute_features(w, account_, hist, cfg_.vol_window, cfg_.d_inv_lag);
    }

    const TickSeries* series_;
    EnvConfig cfg_;
    std::int64_t commission_ht_ = 2;
    std::size_t cursor_ = 0;
    bool done_ = false;
    AccountState account_;
    std::deque<DerivedTick> window_;
    std::vector<double> inv_value_hist_;  // tick units, one entry per step plus the zero pad
    StateVector state_;
};

// ---------------------------------------------------------------------------
// Decision/step log: the CSV surface consumed by eval and pdp.
// ---------------------------------------------------------------------------

struct StepRecord {
    std::int64_t t = 0;  // tick index the decision was made at
    StateVector state;   // features the agent saw
    Action action = Action::NN;
    bool match_ask = false;
    bool match_bid = false;
    double d_cash = 0.0;
    double d_inv_value = 0.0;
    double reward = 0.0;
    std::int64_t inventory = 0;  // after the step
    double wealth = 0.0;         // after the step, ticks
};

inline std::string step_log_header() {
    return "t,s_imbalance,s_volatility,s_inventory,s_spread,s_d_inv_value,action,"
           "match_ask,match_bid,d_cash,d_inv_value,reward,inv,wealth";
}

inline std::string to_csv_row(const StepRecord& r) {
    std::string out = format_int(r.t);
    for (double v : r.state.as_array()) out += ',' + format_double(v);
    out += ',';
    out += to_string(r.action);
    out += ',' + format_int(r.match_ask ? 1 : 0);
    out += ',' + format_int(r.match_bid ? 1 : 0);
    out += ',' + format_double(r.d_cash);
    out += ',' + format_double(r.d_inv_value);
    out += ',' + format_double(r.reward);
    out += ',' + format_int(r.inventory);
    out += ',' + format_double(r.wealth);
    return out;
}

inline StepRecord step_record_from_csv(std::string_view line) {
    const auto f = split_csv_line(line);
    if (f.size() != 14) raise(Errc::malformed_number, "step log row needs 14 fields");
    StepRecord r;
    std::array<double, StateVector::kDim> s{};
    std::int64_t i64 = 0;
    bool ok = try_parse_int(f[0], r.t);
    for (int i = 0; i < StateVector::kDim; ++i) ok = ok && try_parse_double(f[1 + i], s[i]);
    r.state = StateVector::from_array(s);
    r.action = action_from_string(f[6]);
    ok = ok && try_parse_int(f[7], i64);
    r.match_ask = i64 != 0;
    ok = ok && try_parse_int(f[8], i64);
    r.match_bid = i64 != 0;
    ok = ok && try_parse_double(f[9], r.d_cash) && try_parse_double(f[10], r.d_inv_value) &&
         try_parse_double(f[11], r.reward) && try_parse_int(f[12], r.inventory) &&
         try_parse_double(f[13], r.wealth);
    if (!ok) raise(Errc::malformed_number, "bad step log row: " + std::string(line));
    return r;
}

}  // namespace mmlab
