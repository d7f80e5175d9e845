#![allow(dead_code)]
#![allow(non_snake_case)]
#![allow(non_upper_case_globals)]
#![allow(unused_assignments)]
#![allow(unused_mut)]

use std::os::raw::c_int;

static mut OPS: c_int = 0;

unsafe fn bump(mut p: *mut c_int, mut by: c_int) -> c_int {
    *p = *p + by;
    OPS += 1;
    return *p;
}

unsafe fn scale(mut p: *mut c_int, mut k: c_int) -> c_int {
    let mut i: c_int = 0;
    while i < k {
        bump(p, 1 as c_int);
        i += 1;
    }
    return *p;
}

fn tally(limit: i32) -> i64 {
    let mut acc: i64 = 0;
    let mut i: i32 = 0;
    while i < limit {
        if i % 3 == 0 {
            acc += i as i64;
        }
        i += 1;
    }
    let mut j: i32 = 0;
    while j < limit {
        if j % 5 == 0 {
            acc += (j * 2) as i64;
        }
        j += 1;
    }
    let mut k: i32 = 0;
    while k < 4 {
        acc = acc + 1;
        k += 1;
    }
    acc
}

fn main() {
    let mut v: c_int = 0 as c_int;
    let a = unsafe { bump(&mut v as *mut c_int, 5 as c_int) };
    let b = unsafe { scale(&mut v as *mut c_int, 3 as c_int) };
    let t = tally(10 as i32);
    let ops = unsafe { OPS };
    println!("{} {} {} {}", a, b, t, ops);
}
