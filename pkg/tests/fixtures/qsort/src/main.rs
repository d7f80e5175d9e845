#![allow(dead_code)]
#![allow(unused_assignments)]
#![allow(unused_mut)]
#![allow(unused_variables)]

use std::os::raw::{c_char, c_int, c_ulong, c_void};

extern "C" {
    fn malloc(n: c_ulong) -> *mut c_void;
    fn free(p: *mut c_void);
    fn printf(fmt: *const c_char, ...) -> c_int;
}

unsafe fn swap(mut x: *mut c_int, mut y: *mut c_int) {
    let mut t: c_int = *x;
    *x = *y; *y = t;
}

unsafe fn sort_range(mut base: *mut c_int, mut n: c_int) {
    let mut i: c_int = 0 as c_int;
    while i < n {
        let mut j: c_int = i + 1 as c_int;
        while j < n {
            if *base.offset(j as isize) < *base.offset(i as isize) {
                swap(base.offset(i as isize), base.offset(j as isize));
            }
            j += 1;
        }
        i += 1;
    }
}

fn main() {
    let n: c_int = 6 as c_int;
    unsafe {
        let mut arr: *mut c_int = 0 as *mut c_int;
        arr = malloc((n * 4 as c_int) as c_ulong) as *mut c_int;
        let mut k: c_int = 0 as c_int;
        while k < n {
            *arr.offset(k as isize) = n - k; k += 1;
        }
        let before: c_int = *(arr as *const c_int);
        sort_range(arr, n);
        let after: c_int = *(arr as *const c_int);
        let tag: usize = arr as usize;
        if (tag as *const c_int) == (arr as *const c_int) {
            k = before - after;
        }
        let mut m: c_int = 0 as c_int;
        while m < n {
            printf(b"%d \0" as *const u8 as *const c_char, *arr.offset(m as isize));
            m += 1;
        }
        free(((arr as usize) as *mut c_int) as *mut c_void);
    }
}
