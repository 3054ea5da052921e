use rydwire_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rw_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    rw_string_free(p);
    s
}

#[test]
fn fixture_embeds_and_solves() {
    unsafe {
        let name = CString::new("fig4").unwrap();
        let mut problem = ptr::null_mut();
        assert_eq!(rw_fixture_problem(name.as_ptr(), &mut problem), RwStatus::Ok);
        let mut n = 0;
        assert_eq!(rw_problem_size(problem, &mut n), RwStatus::Ok);
        assert_eq!(n, 10);

        let mut emb = ptr::null_mut();
        assert_eq!(rw_embed(problem, -1.0, &mut emb), RwStatus::Ok);
        let mut atoms = 0;
        assert_eq!(rw_embedding_atom_count(emb, &mut atoms), RwStatus::Ok);
        assert_eq!(atoms, 20);

        let mut logical = ptr::null_mut();
        assert_eq!(rw_problem_solve(problem, &mut logical), RwStatus::Ok);
        let mut embedded = ptr::null_mut();
        assert_eq!(rw_embedding_solve(emb, 0, &mut embedded), RwStatus::Ok);
        let (mut e_log, mut e_emb, mut offset) = (0.0, 0.0, 0.0);
        rw_solution_energy(logical, &mut e_log);
        rw_solution_energy(embedded, &mut e_emb);
        rw_embedding_energy_offset(emb, &mut offset);
        assert!((e_emb - offset - e_log).abs() < 1e-9, "{e_emb} {offset} {e_log}");

        // The embedded optimum projects onto a logical optimum.
        let mut bits = ptr::null_mut();
        assert_eq!(rw_solution_configuration(embedded, 0, &mut bits), RwStatus::Ok);
        let mut projected = ptr::null_mut();
        assert_eq!(rw_embedding_extract_logical(emb, bits, &mut projected), RwStatus::Ok);
        rw_string_free(bits);
        let projected = take_string(projected);
        let mut found = false;
        let mut d = 0;
        rw_solution_degeneracy(logical, &mut d);
        for i in 0..d {
            let mut b = ptr::null_mut();
            rw_solution_configuration(logical, i, &mut b);
            found |= take_string(b) == projected;
        }
        assert!(found, "{projected}");

        rw_solution_free(logical);
        rw_solution_free(embedded);
        rw_embedding_free(emb);
        rw_problem_free(problem);
    }
}

#[test]
fn embedding_json_round_trips() {
    unsafe {
        let name = CString::new("fig6").unwrap();
        let mut problem = ptr::null_mut();
        rw_fixture_problem(name.as_ptr(), &mut problem);
        let mut emb = ptr::null_mut();
        assert_eq!(rw_embed(problem, 0.1, &mut emb), RwStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(rw_embedding_to_json(emb, &mut json), RwStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(rw_embedding_from_json(json, &mut back), RwStatus::Ok);
        let mut again = ptr::null_mut();
        rw_embedding_to_json(back, &mut again);
        assert_eq!(take_string(json), take_string(again));
        rw_embedding_free(back);
        rw_embedding_free(emb);
        rw_problem_free(problem);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut problem = ptr::null_mut();
        let bad = CString::new("{not json").unwrap();
        assert_eq!(rw_problem_from_json(bad.as_ptr(), &mut problem), RwStatus::InvalidInput);
        assert!(problem.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(rw_problem_from_json(ptr::null(), &mut problem), RwStatus::NullPointer);
        assert!(last_error().contains("json"));

        let unknown = CString::new("no_such_fixture").unwrap();
        assert_eq!(
            rw_fixture_problem(unknown.as_ptr(), &mut problem),
            RwStatus::InvalidInput
        );

        let mut r = 0.0;
        assert_eq!(rw_blockade_radius(-3376.0, 0.0, 0.0, &mut r), RwStatus::InvalidInput);
        assert_eq!(rw_blockade_radius(-3376.0, 1.0, 0.0, &mut r), RwStatus::Ok);
        assert!(last_error().is_empty());
        assert!((r - 12.1).abs() < 0.2, "{r}");

        let mut p = 0.0;
        // Equal endpoint weights leave no intended sector.
        assert_eq!(
            rw_wire_success_probability(0.5, 0.5, 4, 0.0, 0.05, 100, 1, &mut p),
            RwStatus::InvalidInput
        );
    }
}

#[test]
fn wire_probability_is_seeded() {
    unsafe {
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(
            rw_wire_success_probability(0.8, 0.2, 8, 0.0, 0.05, 5000, 9, &mut a),
            RwStatus::Ok
        );
        assert_eq!(
            rw_wire_success_probability(0.8, 0.2, 8, 0.0, 0.05, 5000, 9, &mut b),
            RwStatus::Ok
        );
        assert_eq!(a, b);
        assert!(a > 0.8 && a <= 1.0, "{a}");
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        rw_problem_free(ptr::null_mut());
        rw_embedding_free(ptr::null_mut());
        rw_solution_free(ptr::null_mut());
        rw_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(rw_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
