//! Built-in library of list and fold functions, plus the list generators
//! used by the experiments.

use std::sync::OnceLock;

use crate::parser::parse_definitions;
use crate::syntax::{Binding, DataEnv};

/// Source text of the built-in library.
pub const PRELUDE_SRC: &str = r#"
comp = \f,g.(\x.f (g x));
foldr = \f,z,xs.case xs of { [] -> z; (y:ys) -> f y (foldr f z ys) };
foldl = \f,z,xs.case xs of { [] -> z; (y:ys) -> foldl f (f z y) ys };
foldl' = \f,z,xs.case xs of {
    [] -> z;
    (y:ys) -> letrec w = (f z y) in seq w (foldl' f w ys) };
map = \f,lst.case lst of { [] -> []; (x:xs) -> (f x) : (map f xs) };
tail = \lst.case lst of { [] -> letrec b = b in b; (x:xs) -> xs };
replicate = \n,x.case n of { Zero -> []; (Succ m) -> x : (replicate m x) };
-- the empty-list alternative only completes the case; it is never taken
last = \lst.case lst of {
    [] -> letrec b = b in b;
    (x:xs) -> case xs of { [] -> x; (y:ys) -> last xs } };
reverse = \xs.case xs of { [] -> []; (y:ys) -> (reverse ys) ++ [y] };
reverse' = \xs.reversew [] xs;
reversew = \xs,ys.case ys of { [] -> xs; (z:zs) -> reversew (z:xs) zs };
(++) = \xs,ys.case xs of { [] -> ys; (z:zs) -> z : (zs ++ ys) };
concat = \xs.foldr (\x,y.foldr (\z,zs.z:zs) y x) [] xs;
concatMap = \f,xs.foldr (\x,b.foldr (\z,zs.z:zs) b (f x)) [] xs;
xor = \x,y.case x of {
    True -> case y of { True -> False; False -> True };
    False -> y };

-- list generators
take = \n,xs.case n of {
    Zero -> [];
    (Succ m) -> case xs of { [] -> []; (y:ys) -> y : (take m ys) } };
trues = True : trues;
falses = False : falses;
pairs = [True, True] : pairs;
"#;

/// Parsed prelude definitions in source order.
pub fn load_prelude() -> &'static [Binding] {
    static PRELUDE: OnceLock<Vec<Binding>> = OnceLock::new();
    PRELUDE.get_or_init(|| {
        parse_definitions(PRELUDE_SRC, &DataEnv::builtin()).expect("built-in prelude parses")
    })
}
