pub fn big(mut x: i32) -> i32 {
    unsafe {
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
        x += 0;
    }
    unsafe {
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
        x += 1;
    }
    unsafe {
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
        x += 2;
    }
    unsafe {
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
        x += 3;
    }
    unsafe {
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
        x += 4;
    }
    unsafe {
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
        x += 5;
    }
    unsafe {
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
        x += 6;
    }
    unsafe {
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
        x += 7;
    }
    unsafe {
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
        x += 8;
    }
    unsafe {
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x += 9;
        x
    }
}

fn main() {
    let s = big(3);
    println!("{}", s);
}
