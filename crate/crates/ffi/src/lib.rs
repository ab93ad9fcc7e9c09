//! C ABI over the `betascale` crate.
//!
//! Instances, densities of states and sample series are exposed as opaque
//! handles created by `bs_*_new`/generator functions and released with the
//! matching `bs_*_free`. Every fallible call returns a [`BsStatus`]; the
//! message for the most recent failure on the calling thread is available
//! from [`bs_last_error`]. Panics never cross the boundary.

mod error;

use std::ffi::{c_char, CStr, CString};

use betascale::analytic;
use betascale::{
    build_chimera, geometric_ladder, DensityOfStates, Instance, PlantedParams, PtSchedule,
    SampleSeries, SpinConfig,
};

pub use error::{bs_last_error, BsStatus};
use error::{guard, invalid, null, BsFailure};

/// Opaque problem instance.
pub struct BsInstance(Instance);

/// Opaque exact density of states.
pub struct BsDos(DensityOfStates);

/// Opaque parallel-tempering sample series.
pub struct BsSeries(SampleSeries);

/// Exact thermodynamics at one inverse temperature.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BsThermo {
    pub beta: f64,
    pub log_z: f64,
    pub mean_e: f64,
    pub c_beta: f64,
    pub sigma_h: f64,
    pub p_le_target: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsSchedule {
    pub warmup_swaps: u64,
    pub sweeps_per_swap: u64,
    pub sample_stride_swaps: u64,
    pub n_samples: u64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BsBetaOfP0 {
    pub beta_exact: f64,
    pub beta_expansion: f64,
}

type FfiResult = Result<(), BsFailure>;

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, BsFailure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, BsFailure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn drop_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn string_out(s: String, dst: &mut *mut c_char) -> FfiResult {
    *dst = CString::new(s).map_err(|_| invalid("string contains NUL"))?.into_raw();
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string produced by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Planted frustrated-loop instance on a `rows x cols` Chimera graph with
/// default loop parameters.
///
/// # Safety
/// `out_instance` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_planted(
    rows: usize,
    cols: usize,
    seed: u64,
    out_instance: *mut *mut BsInstance,
) -> BsStatus {
    guard(|| {
        let dst = out(out_instance, "out_instance")?;
        let graph = build_chimera(rows, cols)?;
        let inst = betascale::generate_planted(&graph, &PlantedParams::default(), seed)?;
        *dst = boxed(BsInstance(inst));
        Ok(())
    })
}

/// Bimodal ±1 couplings on a `rows x cols` Chimera graph.
///
/// # Safety
/// `out_instance` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_bimodal(
    rows: usize,
    cols: usize,
    seed: u64,
    out_instance: *mut *mut BsInstance,
) -> BsStatus {
    guard(|| {
        let dst = out(out_instance, "out_instance")?;
        let graph = build_chimera(rows, cols)?;
        *dst = boxed(BsInstance(betascale::generate_bimodal(&graph, seed)?));
        Ok(())
    })
}

/// 3-regular 3-XORSAT instance with `n_spins` variables.
///
/// # Safety
/// `out_instance` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_xorsat3(
    n_spins: usize,
    seed: u64,
    out_instance: *mut *mut BsInstance,
) -> BsStatus {
    guard(|| {
        let dst = out(out_instance, "out_instance")?;
        *dst = boxed(BsInstance(betascale::generate_xorsat3(n_spins, seed)?));
        Ok(())
    })
}

/// Parses an instance from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_instance` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_from_json(
    json: *const c_char,
    out_instance: *mut *mut BsInstance,
) -> BsStatus {
    guard(|| {
        let dst = out(out_instance, "out_instance")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let s = CStr::from_ptr(json).to_str().map_err(|_| invalid("json is not UTF-8"))?;
        *dst = boxed(BsInstance(Instance::from_json(s)?));
        Ok(())
    })
}

/// Serializes an instance to JSON; free the result with [`bs_string_free`].
///
/// # Safety
/// `instance` must be a live handle; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_to_json(
    instance: *const BsInstance,
    out_json: *mut *mut c_char,
) -> BsStatus {
    guard(|| {
        let inst = deref(instance, "instance")?;
        string_out(inst.0.to_json_pretty()?, out(out_json, "out_json")?)
    })
}

/// Hex content hash of an instance; free the result with [`bs_string_free`].
///
/// # Safety
/// `instance` must be a live handle; `out_hash` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_hash(
    instance: *const BsInstance,
    out_hash: *mut *mut c_char,
) -> BsStatus {
    guard(|| {
        let inst = deref(instance, "instance")?;
        string_out(inst.0.content_hash(), out(out_hash, "out_hash")?)
    })
}

/// Number of spins, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_n_spins(instance: *const BsInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.0.n_spins())
}

/// Ground energy known by construction. Writes 1 to `out_known` and the
/// energy to `out_e0` when available, 0 otherwise.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_known_e0(
    instance: *const BsInstance,
    out_known: *mut i32,
    out_e0: *mut f64,
) -> BsStatus {
    guard(|| {
        let inst = deref(instance, "instance")?;
        let known = out(out_known, "out_known")?;
        let e0 = out(out_e0, "out_e0")?;
        match inst.0.known_e0() {
            Some(v) => {
                *known = 1;
                *e0 = v;
            }
            None => {
                *known = 0;
                *e0 = f64::NAN;
            }
        }
        Ok(())
    })
}

/// Energy of a configuration given as `n` spins with values ±1.
///
/// # Safety
/// `spins` must point to `n` readable bytes; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_energy(
    instance: *const BsInstance,
    spins: *const i8,
    n: usize,
    out_energy: *mut f64,
) -> BsStatus {
    guard(|| {
        let inst = deref(instance, "instance")?;
        let dst = out(out_energy, "out_energy")?;
        if spins.is_null() {
            return Err(null("spins"));
        }
        let config = SpinConfig::new(std::slice::from_raw_parts(spins, n).to_vec())?;
        *dst = inst.0.energy(&config)?;
        Ok(())
    })
}

/// # Safety
/// `instance` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_free(instance: *mut BsInstance) {
    drop_handle(instance);
}

/// Exact density of states by exhaustive enumeration.
///
/// # Safety
/// `instance` must be a live handle; `out_dos` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_dos_enumerate(
    instance: *const BsInstance,
    out_dos: *mut *mut BsDos,
) -> BsStatus {
    guard(|| {
        let inst = deref(instance, "instance")?;
        let dst = out(out_dos, "out_dos")?;
        *dst = boxed(BsDos(betascale::enumerate_dos(&inst.0)?));
        Ok(())
    })
}

/// Number of distinct energy levels, or 0 for a null handle.
///
/// # Safety
/// `dos` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_dos_n_levels(dos: *const BsDos) -> usize {
    dos.as_ref().map_or(0, |d| d.0.levels().len())
}

/// Copies level energies and degeneracies (ascending energy) into caller
/// buffers of length `len`, which must be at least the level count.
///
/// # Safety
/// `energies` and `counts` must point to `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn bs_dos_levels(
    dos: *const BsDos,
    energies: *mut f64,
    counts: *mut u64,
    len: usize,
) -> BsStatus {
    guard(|| {
        let d = deref(dos, "dos")?;
        if energies.is_null() || counts.is_null() {
            return Err(null("output buffer"));
        }
        let levels = d.0.levels();
        if len < levels.len() {
            return Err(invalid(format!("buffer holds {len}, need {}", levels.len())));
        }
        for (k, level) in levels.iter().enumerate() {
            *energies.add(k) = level.energy;
            *counts.add(k) = level.degeneracy;
        }
        Ok(())
    })
}

/// Exact thermodynamics at `beta` with target energy `target_e`.
///
/// # Safety
/// `dos` must be a live handle; `out_thermo` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_dos_thermo(
    dos: *const BsDos,
    beta: f64,
    target_e: f64,
    out_thermo: *mut BsThermo,
) -> BsStatus {
    guard(|| {
        let d = deref(dos, "dos")?;
        let dst = out(out_thermo, "out_thermo")?;
        let t = betascale::thermo_from_dos(&d.0, beta, target_e)?;
        *dst = BsThermo {
            beta: t.beta,
            log_z: t.log_z,
            mean_e: t.mean_e,
            c_beta: t.c_beta,
            sigma_h: t.sigma_h,
            p_le_target: t.p_le_target,
        };
        Ok(())
    })
}

/// Smallest β with `P(E <= target_e) >= q`.
///
/// # Safety
/// `dos` must be a live handle; `out_beta` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_dos_beta_star(
    dos: *const BsDos,
    target_e: f64,
    q: f64,
    out_beta: *mut f64,
) -> BsStatus {
    guard(|| {
        let d = deref(dos, "dos")?;
        let dst = out(out_beta, "out_beta")?;
        *dst = betascale::beta_star_exact(&d.0, target_e, q)?;
        Ok(())
    })
}

/// # Safety
/// `dos` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_dos_free(dos: *mut BsDos) {
    drop_handle(dos);
}

/// Parallel tempering on a geometric ladder of `n_rungs` inverse
/// temperatures between `beta_min` and `beta_max`.
///
/// # Safety
/// `instance` must be a live handle; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_pt_run(
    instance: *const BsInstance,
    beta_min: f64,
    beta_max: f64,
    n_rungs: usize,
    schedule: *const BsSchedule,
    out_series: *mut *mut BsSeries,
) -> BsStatus {
    guard(|| {
        let inst = deref(instance, "instance")?;
        let s = deref(schedule, "schedule")?;
        let dst = out(out_series, "out_series")?;
        let ladder = geometric_ladder(beta_min, beta_max, n_rungs)?;
        let schedule = PtSchedule {
            warmup_swaps: s.warmup_swaps,
            sweeps_per_swap: s.sweeps_per_swap,
            sample_stride_swaps: s.sample_stride_swaps,
            n_samples: usize::try_from(s.n_samples).map_err(|_| invalid("n_samples too large"))?,
            seed: s.seed,
        };
        *dst = boxed(BsSeries(betascale::pt_run(&inst.0, &ladder, &schedule)?));
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_series_n_rungs(series: *const BsSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.n_rungs())
}

/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_series_n_samples(series: *const BsSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.n_samples())
}

/// Inverse temperature of rung `rung` (ascending order).
///
/// # Safety
/// `series` must be a live handle; `out_beta` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_series_beta(
    series: *const BsSeries,
    rung: usize,
    out_beta: *mut f64,
) -> BsStatus {
    guard(|| {
        let s = deref(series, "series")?;
        let dst = out(out_beta, "out_beta")?;
        *dst = *s.0.betas.get(rung).ok_or_else(|| invalid(format!("no rung {rung}")))?;
        Ok(())
    })
}

/// Copies the energy samples of one rung into `buf` of length `len`.
///
/// # Safety
/// `series` must be a live handle; `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn bs_series_energies(
    series: *const BsSeries,
    rung: usize,
    buf: *mut f64,
    len: usize,
) -> BsStatus {
    guard(|| {
        let s = deref(series, "series")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let samples = s.0.energies.get(rung).ok_or_else(|| invalid(format!("no rung {rung}")))?;
        if len < samples.len() {
            return Err(invalid(format!("buffer holds {len}, need {}", samples.len())));
        }
        std::ptr::copy_nonoverlapping(samples.as_ptr(), buf, samples.len());
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_series_free(series: *mut BsSeries) {
    drop_handle(series);
}

/// Inverse temperature at which `n` independent spins reach ground-state
/// probability `p0`.
///
/// # Safety
/// `out_beta` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_indep_spins_beta_of_p0(
    n: usize,
    p0: f64,
    out_beta: *mut BsBetaOfP0,
) -> BsStatus {
    guard(|| {
        let dst = out(out_beta, "out_beta")?;
        let b = analytic::indep_spins_beta_of_p0(n, p0)?;
        *dst = BsBetaOfP0 {
            beta_exact: b.beta_exact,
            beta_expansion: b.beta_expansion,
        };
        Ok(())
    })
}

/// Inverse temperature at which the Grover model on `n` spins reaches
/// ground-state probability `p0`.
///
/// # Safety
/// `out_beta` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_grover_beta_of_p0(
    n: usize,
    p0: f64,
    out_beta: *mut BsBetaOfP0,
) -> BsStatus {
    guard(|| {
        let dst = out(out_beta, "out_beta")?;
        let b = analytic::grover_beta_of_p0(n, p0)?;
        *dst = BsBetaOfP0 {
            beta_exact: b.beta_exact,
            beta_expansion: b.beta_expansion,
        };
        Ok(())
    })
}
