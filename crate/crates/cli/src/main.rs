//! Command-line front end for the nowcasting toolkit.

fn main() {
    println!("pvnowcast");
}
