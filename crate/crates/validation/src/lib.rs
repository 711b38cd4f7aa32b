//! Holds the `acceptance` test target. Kept in its own package so that it runs
//! after every other test target in the workspace.
