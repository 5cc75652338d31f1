//! C ABI over the offload auction.
//!
//! Objects cross the boundary as opaque handles created by `oa_*_new` or
//! `oa_*_from_*` and released with the matching `oa_*_free`. Every fallible
//! call returns an [`OaStatus`]; on failure [`oa_last_error`] describes what
//! went wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use offload_auction::auction::{
    run_auction, screen_participants, AuctionInstance, AuctionOutcome, BuyerBid, PairTerms, SellerAsk,
};
use offload_auction::{validate_config, SystemConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Config = 4,
    Auction = 5,
    Panic = 6,
}

/// Simulation and mechanism settings.
pub struct OaConfig(SystemConfig);

/// An auction under construction: bids, asks and the links between them.
pub struct OaAuction(AuctionInstance);

/// The result of running an auction.
pub struct OaOutcome(AuctionOutcome);

/// A UE's bid for one task.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OaBid {
    pub ue_id: usize,
    /// Cores requested.
    pub demand: u32,
    pub valuation: f64,
    /// Seconds.
    pub deadline: f64,
    pub budget: f64,
    pub participation: bool,
    pub offload_prob: f64,
    /// Latency if the task stays local, in seconds.
    pub local_latency: f64,
}

/// An edge server's offer.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OaAsk {
    pub es_id: usize,
    pub resource: u32,
    /// Posted price per core.
    pub reserve_price: f64,
    pub available: u32,
    pub unit_cost: f64,
    pub participation: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: OaStatus, msg: impl Into<String>) -> OaStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `OaStatus::Panic`.
fn guard(f: impl FnOnce() -> OaStatus) -> OaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(OaStatus::Panic, "internal panic"),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn oa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn oa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in default settings. Never returns NULL.
#[no_mangle]
pub extern "C" fn oa_config_default() -> *mut OaConfig {
    Box::into_raw(Box::new(OaConfig(SystemConfig::default())))
}

/// Parses and validates a TOML document; keys left out keep their defaults.
///
/// # Safety
/// `toml` must be NULL or a NUL-terminated string; `out` must be NULL or
/// point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn oa_config_from_toml(toml: *const c_char, out: *mut *mut OaConfig) -> OaStatus {
    guard(|| {
        if toml.is_null() || out.is_null() {
            return fail(OaStatus::NullPointer, "null argument");
        }
        let Ok(doc) = CStr::from_ptr(toml).to_str() else {
            return fail(OaStatus::InvalidArgument, "config is not valid UTF-8");
        };
        match validate_config(doc) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(OaConfig(cfg)));
                OaStatus::Ok
            }
            Err(e) => fail(OaStatus::Config, e.to_string()),
        }
    })
}

/// # Safety
/// `config` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oa_config_free(config: *mut OaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// An empty auction. Never returns NULL.
#[no_mangle]
pub extern "C" fn oa_auction_new() -> *mut OaAuction {
    Box::into_raw(Box::new(OaAuction(AuctionInstance { bids: Vec::new(), asks: Vec::new(), links: Vec::new() })))
}

/// # Safety
/// `auction` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oa_auction_free(auction: *mut OaAuction) {
    if !auction.is_null() {
        drop(Box::from_raw(auction));
    }
}

/// Appends a bid, initially linked to no server. Its index is written to
/// `index` when that is not NULL.
///
/// # Safety
/// `auction` and `bid` must be valid pointers; `index` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn oa_auction_add_bid(auction: *mut OaAuction, bid: *const OaBid, index: *mut usize) -> OaStatus {
    guard(|| {
        let (Some(a), Some(b)) = (auction.as_mut(), bid.as_ref()) else {
            return fail(OaStatus::NullPointer, "null argument");
        };
        let finite = [b.valuation, b.budget, b.offload_prob, b.local_latency].iter().all(|v| v.is_finite());
        if !finite || b.valuation < 0.0 || !(0.0..=1.0).contains(&b.offload_prob) || b.deadline.is_nan() {
            return fail(OaStatus::InvalidArgument, "bid has a negative, non-finite or out-of-range field");
        }
        let inst = &mut a.0;
        inst.bids.push(BuyerBid {
            ue_id: b.ue_id,
            demand: b.demand,
            valuation: b.valuation,
            deadline: b.deadline,
            budget: b.budget,
            participation: b.participation,
            offload_prob: b.offload_prob,
            local_latency: b.local_latency,
        });
        inst.links.push(vec![None; inst.asks.len()]);
        if let Some(i) = index.as_mut() {
            *i = inst.bids.len() - 1;
        }
        OaStatus::Ok
    })
}

/// Appends an ask, initially linked to no bidder. Its index is written to
/// `index` when that is not NULL.
///
/// # Safety
/// `auction` and `ask` must be valid pointers; `index` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn oa_auction_add_ask(auction: *mut OaAuction, ask: *const OaAsk, index: *mut usize) -> OaStatus {
    guard(|| {
        let (Some(a), Some(s)) = (auction.as_mut(), ask.as_ref()) else {
            return fail(OaStatus::NullPointer, "null argument");
        };
        if !(s.reserve_price.is_finite() && s.unit_cost.is_finite()) || s.reserve_price < 0.0 || s.unit_cost < 0.0 {
            return fail(OaStatus::InvalidArgument, "ask price and cost must be finite and non-negative");
        }
        let inst = &mut a.0;
        inst.asks.push(SellerAsk {
            es_id: s.es_id,
            resource: s.resource,
            reserve_price: s.reserve_price,
            available: s.available,
            unit_cost: s.unit_cost,
            participation: s.participation,
        });
        for row in &mut inst.links {
            row.push(None);
        }
        if let Some(j) = index.as_mut() {
            *j = inst.asks.len() - 1;
        }
        OaStatus::Ok
    })
}

/// Lets bidder `bid` be served by server `ask` with the given completion
/// latency (seconds) and offloaded fraction.
///
/// # Safety
/// `auction` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn oa_auction_link(
    auction: *mut OaAuction,
    bid: usize,
    ask: usize,
    offload_latency: f64,
    split: f64,
) -> OaStatus {
    guard(|| {
        let Some(a) = auction.as_mut() else {
            return fail(OaStatus::NullPointer, "null auction");
        };
        let inst = &mut a.0;
        if bid >= inst.bids.len() || ask >= inst.asks.len() {
            return fail(OaStatus::OutOfRange, format!("no pair ({bid}, {ask})"));
        }
        if !(offload_latency >= 0.0) || !(0.0..=1.0).contains(&split) {
            return fail(OaStatus::InvalidArgument, "latency must be non-negative and split in [0, 1]");
        }
        inst.links[bid][ask] = Some(PairTerms { offload_latency, split });
        OaStatus::Ok
    })
}

/// Screens participants and runs one auction under `config`.
///
/// # Safety
/// `auction` and `config` must be valid handles; `out` must point to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn oa_auction_run(
    auction: *const OaAuction,
    config: *const OaConfig,
    out: *mut *mut OaOutcome,
) -> OaStatus {
    guard(|| {
        let (Some(a), Some(c)) = (auction.as_ref(), config.as_ref()) else {
            return fail(OaStatus::NullPointer, "null argument");
        };
        if out.is_null() {
            return fail(OaStatus::NullPointer, "null output");
        }
        let mut inst = a.0.clone();
        screen_participants(&mut inst);
        match run_auction(&inst, &c.0) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(OaOutcome(outcome)));
                OaStatus::Ok
            }
            Err(e) => fail(OaStatus::Auction, e.to_string()),
        }
    })
}

/// # Safety
/// `outcome` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_free(outcome: *mut OaOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

unsafe fn read<T>(
    outcome: *const OaOutcome,
    value: *mut T,
    get: impl FnOnce(&AuctionOutcome) -> Result<T, String>,
) -> OaStatus {
    guard(|| {
        let (Some(o), false) = (outcome.as_ref(), value.is_null()) else {
            return fail(OaStatus::NullPointer, "null argument");
        };
        match get(&o.0) {
            Ok(v) => {
                *value = v;
                OaStatus::Ok
            }
            Err(msg) => fail(OaStatus::OutOfRange, msg),
        }
    })
}

/// Server index assigned to bidder `bid`, or -1 when it lost.
///
/// # Safety
/// `outcome` must be a valid handle and `server` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_server(outcome: *const OaOutcome, bid: usize, server: *mut i64) -> OaStatus {
    read(outcome, server, |o| match o.assignment.get(bid) {
        Some(a) => Ok(a.map_or(-1, |j| j as i64)),
        None => Err(format!("no bidder {bid}")),
    })
}

/// Payment of bidder `bid` (zero for losers).
///
/// # Safety
/// `outcome` must be a valid handle and `payment` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_payment(outcome: *const OaOutcome, bid: usize, payment: *mut f64) -> OaStatus {
    read(outcome, payment, |o| o.payments.get(bid).copied().ok_or(format!("no bidder {bid}")))
}

/// Income collected by server `ask`.
///
/// # Safety
/// `outcome` must be a valid handle and `income` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_income(outcome: *const OaOutcome, ask: usize, income: *mut f64) -> OaStatus {
    read(outcome, income, |o| o.incomes.get(ask).copied().ok_or(format!("no server {ask}")))
}

/// Sum of every participant's payoff.
///
/// # Safety
/// `outcome` must be a valid handle and `welfare` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_social_welfare(outcome: *const OaOutcome, welfare: *mut f64) -> OaStatus {
    read(outcome, welfare, |o| Ok(o.social_welfare))
}

/// Total declared valuation of the winners.
///
/// # Safety
/// `outcome` must be a valid handle and `welfare` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_declared_welfare(outcome: *const OaOutcome, welfare: *mut f64) -> OaStatus {
    read(outcome, welfare, |o| Ok(o.declared_welfare))
}

/// Number of winners removed for exceeding their budget.
///
/// # Safety
/// `outcome` must be a valid handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_demoted_count(outcome: *const OaOutcome, count: *mut usize) -> OaStatus {
    read(outcome, count, |o| Ok(o.demoted.len()))
}
