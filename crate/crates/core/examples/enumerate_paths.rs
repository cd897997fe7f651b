//! List every tuition path of the HOU program.

use coursepop::fixtures::hou;
use coursepop::paths::enumerate_paths;

fn main() {
    let paths = enumerate_paths(&hou());
    for p in &paths {
        println!("{p}");
    }
    println!("{} paths", paths.len());
}
