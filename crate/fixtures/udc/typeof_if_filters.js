var filters = new Map();
setup(filters);
router.get('/filter', function (req, res) {
  var filter = filters.get(req.filter);
  if (filter && typeof filter === 'function') {
    filter(req.rows);
  }
});
