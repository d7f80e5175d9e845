// Hand-countable metrics fixture. Expected counts, by construction:
//   raw pointer declarations: 3  (Holder.slot, poke's p, make's q)
//   raw pointer dereferences: 2  (both *p uses inside poke)
//   unsafe lines:             7  (interior of poke's unsafe block)
//   unsafe calls:             2  (observe, emit)
//   unsafe casts:             1  (p as usize)
#![allow(dead_code)]

use std::os::raw::c_int;

struct Holder {
    slot: *mut c_int,
}

fn observe(_x: c_int) {}

fn emit() {}

fn make(q: *const c_int) -> Holder {
    Holder {
        slot: q as *mut c_int,
    }
}

fn poke(p: *mut c_int) -> c_int {
    let mut sum: c_int = 0;
    unsafe {
        *p += 1;
        observe(*p);
        emit();
        let tag = p as usize;
        if tag % 2 == 0 {
            sum += 1;
        }
    }
    sum
}

fn main() {
    let mut v: c_int = 41;
    let s = poke(&mut v as *mut c_int);
    let h = make(&v as *const c_int);
    println!("{} {} {:?}", v, s, h.slot.is_null());
}
