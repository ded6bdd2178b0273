use crate::geom::Aabb;

/// Static bounding-volume hierarchy over a fixed set of items (median split
/// on the longest centroid axis, built once). Items are addressed by their
/// index in the box slice passed to `build`.
#[derive(Clone, Debug)]
pub struct Bvh<const D: usize> {
    nodes: Vec<Node<D>>,
    order: Vec<u32>,
    boxes: Vec<Aabb<D>>,
}

#[derive(Clone, Debug)]
struct Node<const D: usize> {
    aabb: Aabb<D>,
    /// Leaf: start index into `order`. Internal: index of the left child
    /// (right child follows the left subtree contiguously via `right`).
    left: u32,
    right: u32,
    /// 0 marks an internal node; leaves hold 1..=LEAF_SIZE items.
    count: u32,
}

const LEAF_SIZE: usize = 4;

impl<const D: usize> Bvh<D> {
    pub fn build(boxes: &[Aabb<D>]) -> Self {
        let mut order: Vec<u32> = (0..boxes.len() as u32).collect();
        let mut nodes = Vec::new();
        if !boxes.is_empty() {
            let len = order.len();
            Self::build_node(boxes, &mut order, 0, len, &mut nodes);
        }
        Bvh {
            nodes,
            order,
            boxes: boxes.to_vec(),
        }
    }

    fn build_node(
        boxes: &[Aabb<D>],
        order: &mut [u32],
        start: usize,
        len: usize,
        nodes: &mut Vec<Node<D>>,
    ) -> u32 {
        let me = nodes.len() as u32;
        let mut aabb = Aabb::empty();
        let mut centroid_box = Aabb::empty();
        for &i in &order[start..start + len] {
            aabb = aabb.merge(boxes[i as usize]);
            centroid_box.grow(boxes[i as usize].center());
        }
        nodes.push(Node {
            aabb,
            left: start as u32,
            right: 0,
            count: len as u32,
        });
        let axis = centroid_box.longest_axis();
        let spread = centroid_box.hi[axis] - centroid_box.lo[axis];
        if len <= LEAF_SIZE || !(spread > 0.0) {
            return me;
        }
        order[start..start + len]
            .sort_by(|&a, &b| {
                let ca = boxes[a as usize].center()[axis];
                let cb = boxes[b as usize].center()[axis];
                ca.total_cmp(&cb)
            });
        let half = len / 2;
        let left = Self::build_node(boxes, order, start, half, nodes);
        let right = Self::build_node(boxes, order, start + half, len - half, nodes);
        nodes[me as usize].left = left;
        nodes[me as usize].right = right;
        nodes[me as usize].count = 0;
        me
    }

    /// Call `hit` for every item whose box overlaps `query`; `hit` returning
    /// true stops the traversal and propagates (used for first-hit queries).
    pub fn any_overlap(&self, query: &Aabb<D>, mut hit: impl FnMut(usize) -> bool) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut stack = vec![0u32];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            if !node.aabb.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                let start = node.left as usize;
                for &item in &self.order[start..start + node.count as usize] {
                    if self.boxes[item as usize].overlaps(query) && hit(item as usize) {
                        return true;
                    }
                }
            } else {
                stack.push(node.right);
                stack.push(node.left);
            }
        }
        false
    }

    pub fn for_each_overlap(&self, query: &Aabb<D>, mut f: impl FnMut(usize)) {
        self.any_overlap(query, |i| {
            f(i);
            false
        });
    }
}
