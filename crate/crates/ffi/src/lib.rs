//! C ABI for loading test databases, computing ground truths and running
//! campaigns. Strings cross the boundary as NUL-terminated UTF-8; strings
//! returned to the caller must be released with [`jp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use joinprobe::database::TestDatabase;
use joinprobe::dialect::Dialect;
use joinprobe::generator::parse::{parse_query, TableInfo};
use joinprobe::harness::{run_campaign, CampaignConfig};
use joinprobe::noise::{inject, NoisePlan};
use joinprobe::normalizer::{ddl, normalize, NormalizeConfig};
use joinprobe::oracle::ground_truth;
use joinprobe::{fixture, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    Unsupported = 3,
    Engine = 4,
    Config = 5,
    Io = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Opaque handle to a normalized, possibly noise-injected test database.
pub struct JpDatabase {
    db: TestDatabase,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> JpStatus {
    match e {
        Error::Unsupported(_) | Error::Parse(_) => JpStatus::Unsupported,
        Error::Engine(_) => JpStatus::Engine,
        Error::Config(_) => JpStatus::Config,
        Error::Io(_) => JpStatus::Io,
        _ => JpStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (JpStatus, String)>) -> JpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            JpStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            JpStatus::Internal
        }
    }
}

fn lib<T>(r: joinprobe::Result<T>) -> Result<T, (JpStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (JpStatus, String)> {
    if p.is_null() {
        return Err((JpStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (JpStatus::InvalidInput, format!("{what} is not UTF-8")))
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), (JpStatus, String)> {
    let c = CString::new(s).map_err(|_| (JpStatus::Internal, "output contains NUL".to_string()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

fn json(v: &serde_json::Value) -> String {
    v.to_string()
}

/// Load `source` (`builtin:shopping`, `builtin:synthetic:<seed>` or a CSV
/// path), normalize it and, when `epsilon` > 0, inject noise drawn from
/// `seed`. On success `*out` owns a handle for [`jp_database_free`].
///
/// # Safety
/// `source` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jp_database_load(
    source: *const c_char,
    epsilon: f64,
    seed: u64,
    out: *mut *mut JpDatabase,
) -> JpStatus {
    guard(|| {
        if out.is_null() {
            return Err((JpStatus::NullArgument, "out is NULL".into()));
        }
        let source = text(source, "source")?;
        let mut db = lib(normalize(&lib(fixture::load(source))?, &NormalizeConfig::default()))?;
        if epsilon > 0.0 {
            db = lib(inject(&db, &NoisePlan::generate(&db, epsilon, seed)))?;
        }
        *out = Box::into_raw(Box::new(JpDatabase { db }));
        Ok(())
    })
}

/// # Safety
/// `db` must come from [`jp_database_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jp_database_free(db: *mut JpDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// # Safety
/// `db` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jp_database_table_count(db: *const JpDatabase, out: *mut usize) -> JpStatus {
    guard(|| {
        if db.is_null() || out.is_null() {
            return Err((JpStatus::NullArgument, "db or out is NULL".into()));
        }
        *out = (*db).db.table_count();
        Ok(())
    })
}

/// CREATE TABLE statements for `dialect` (`generic`, `mysql`, `mariadb`,
/// `tidb`), followed by INSERTs when `with_data` is non-zero.
///
/// # Safety
/// `db` must be a live handle, `dialect` a valid C string, `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn jp_database_ddl(
    db: *const JpDatabase,
    dialect: *const c_char,
    with_data: i32,
    out: *mut *mut c_char,
) -> JpStatus {
    guard(|| {
        if db.is_null() || out.is_null() {
            return Err((JpStatus::NullArgument, "db or out is NULL".into()));
        }
        let name = text(dialect, "dialect")?;
        let dialect = Dialect::parse(name).ok_or((JpStatus::Config, format!("unknown dialect {name}")))?;
        let db = &(*db).db;
        let mut stmts = ddl::create_statements(db, dialect, false);
        if with_data != 0 {
            stmts.extend(ddl::insert_statements(db));
        }
        out_string(stmts.iter().map(|s| format!("{s};\n")).collect(), out)
    })
}

/// Ground truth of a generated-shape query as JSON:
/// `{"mode": "FullSet"|"SubSet", "columns": [...], "rows": [[...]], "provenance": [RowID...]}`
/// with values rendered as SQL literals.
///
/// # Safety
/// `db` must be a live handle, `sql` a valid C string, `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn jp_ground_truth(db: *const JpDatabase, sql: *const c_char, out: *mut *mut c_char) -> JpStatus {
    guard(|| {
        if db.is_null() || out.is_null() {
            return Err((JpStatus::NullArgument, "db or out is NULL".into()));
        }
        let db = &(*db).db;
        let ast = lib(parse_query(text(sql, "sql")?, &TableInfo::from_schema(&db.schema)))?;
        let gt = lib(ground_truth(&ast, db))?;
        let rows: Vec<Vec<String>> =
            gt.result.rows.iter().map(|r| r.iter().map(|v| v.to_sql_literal()).collect()).collect();
        let provenance: Vec<usize> = gt.provenance.iter_ones().collect();
        let v = serde_json::json!({
            "mode": format!("{:?}", gt.mode),
            "columns": gt.result.columns,
            "rows": rows,
            "provenance": provenance,
        });
        out_string(json(&v), out)
    })
}

/// Run a campaign configured by TOML text (same keys as the CLI config
/// file) and return its summary as JSON.
///
/// # Safety
/// `config_toml` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jp_run_campaign(config_toml: *const c_char, out: *mut *mut c_char) -> JpStatus {
    guard(|| {
        if out.is_null() {
            return Err((JpStatus::NullArgument, "out is NULL".into()));
        }
        let cfg = lib(CampaignConfig::from_toml(text(config_toml, "config")?))?;
        let outcome = lib(run_campaign(&cfg))?;
        let summary = serde_json::to_value(&outcome.summary).map_err(|e| (JpStatus::Internal, e.to_string()))?;
        out_string(json(&summary), out)
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn jp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn jp_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
